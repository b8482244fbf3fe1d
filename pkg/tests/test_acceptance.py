"""The ten acceptance criteria, one verify check each, at their time limits.

Each test prints a single PASS/FAIL line with the check name and wall time.
"""

import pytest

from localcycles.checks import CHECKS, run_check

CRITERIA = [
    (1, "c01-unary-densities", 30),
    (2, "c02-twisted-density", 600),
    (3, "c03-inert-derivative", 60),
    (4, "c04-split-derivative", 60),
    (5, "c05-tube-calibration", 120),
    (6, "c06-case1-closed-count", 600),
    (7, "c07-tube-density-identity", 900),
    (8, "c08-irreducibility-enumeration", 1800),
    (9, "c09-property-suites", 300),
    (10, "c10-dichotomy-and-diff", 600),
]


def test_every_check_has_a_criterion():
    assert sorted(name for _, name, _ in CRITERIA) == sorted(CHECKS)


@pytest.mark.parametrize("number,name,limit", CRITERIA, ids=[c[1] for c in CRITERIA])
def test_acceptance(number, name, limit, capsys):
    res = run_check(name, seed=0)
    ok = res.status == "pass" and res.seconds < limit
    with capsys.disabled():
        print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:2d} {name}: {res.status}, "
              f"{len(res.comparisons)} comparisons, {res.seconds:.1f}s (limit {limit}s)")
    assert res.status == "pass", [c for c in res.comparisons if not c.ok] or res.note
    assert res.seconds < limit
