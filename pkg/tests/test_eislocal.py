from fractions import Fraction

import pytest

from localcycles import eislocal as e
from localcycles.classify import classify_cycle
from localcycles.lengths import e_p
from localcycles.padic import PrimeContext
from localcycles.qform import DiagonalForm, SymForm, parse_form, represents_locally

C3 = PrimeContext.create(3)
C5 = PrimeContext.create(5)


def sweep(ctx, max_sum=4):
    """All canonical T = diag(u1, u2 p^a2, u3 p^a3) with a2 + a3 <= max_sum."""
    seen = set()
    for a2 in range(max_sum + 1):
        for a3 in range(a2, max_sum - a2 + 1):
            for units in [(1, 1, 1), (1, 1, 2), (1, 2, 1), (2, 1, 1), (1, 2, 2), (2, 2, 2)]:
                T = DiagonalForm.make(ctx, (0, a2, a3), [ctx.delta if u == 2 else 1 for u in units])
                if T not in seen:
                    seen.add(T)
                    yield T


def test_inert_value():
    T = parse_form("1,p,p", C3)
    v = e.whittaker_value(T, "inert")
    assert v.magnitude == 2 * Fraction(1, 81) * 8
    assert v.gamma == "gV'" and v.logp == 0


def test_split_value():
    v = e.whittaker_value(parse_form("1,1,p", C3), "split")
    assert v.magnitude == 2 * Fraction(1, 81) * 16
    assert v.gamma == "gV'"


def test_value_of_nonintegral_is_zero():
    v = e.whittaker_value(parse_form("1/3,1,p", C3), "inert")
    assert v.magnitude == 0


def test_inert_derivative_example():
    p2 = Fraction(1, 9)
    d = e.whittaker_derivative(parse_form("1,D,p", C3), "inert")
    assert d.magnitude == (1 + p2) * (1 - p2) * 1
    assert d.gamma == "gV" and d.logp == 1


def test_split_derivative_example():
    p2 = Fraction(1, 9)
    d = e.whittaker_derivative(parse_form("1,p,p", C3), "split")
    assert d.magnitude == (1 - p2) ** 2 * 2


def test_hypothesis_violations_are_explicit():
    with pytest.raises(e.UnsupportedCase):
        e.whittaker_value(parse_form("1,1,p", C3), "inert")  # not represented by V'
    with pytest.raises(e.UnsupportedCase):
        e.whittaker_value(parse_form("p,p,p", C3), "inert")  # T = 0 mod p
    with pytest.raises(e.UnsupportedCase):
        e.whittaker_derivative(parse_form("1,D,p", C3), "split")
    with pytest.raises(ValueError):
        e.whittaker_value(parse_form("1,p,p", C3), "ramified")


@pytest.mark.parametrize("ctx", [C3, C5], ids=["p3", "p5"])
@pytest.mark.parametrize("case", ["inert", "split"])
def test_two_paths_agree_on_sweep(ctx, case):
    checked = 0
    for T in sweep(ctx):
        if not e.represented_by_twisted(T, case):
            continue
        assert e.whittaker_value(T, case) == e.whittaker_value_from_density(T, case), T
        if e_p(T).in_domain:
            assert e.whittaker_derivative(T, case) == e.whittaker_derivative_from_density(T, case), T
            checked += 1
    assert checked >= 4


@pytest.mark.parametrize("ctx", [C3, C5], ids=["p3", "p5"])
def test_value_nonzero_exactly_on_twisted_space(ctx):
    for T in sweep(ctx, 3):
        v = e.whittaker_value_from_density(T, "inert")
        assert (v.magnitude != 0) == represents_locally(T, "V'"), T


def test_token_relation():
    v = e.WhittakerValue(Fraction(2), "gV")
    assert v.in_terms_of("gV'") == e.WhittakerValue(Fraction(-2), "gV'")
    assert v.in_terms_of("gV'").in_terms_of("gV") == v
    with pytest.raises(ValueError):
        e.WhittakerValue(Fraction(1), "gamma")
    assert v.to_json() == {"magnitude": "2/1", "gamma": "gV", "logp": 0}


def test_degree_factor_regular():
    f = e.degree_factor(SymForm.diagonal([1, 2, 3]), 1, C3)
    assert (f.e_p, f.prime, f.logp, f.regular) == (1, 3, 1, True)
    assert f.classification.locus == "isolated-superspecial"


def test_degree_factor_not_regular():
    with pytest.raises(e.NotRegular):
        e.degree_factor(SymForm.diagonal([3, 3, 3]), 1, C3, "inert")


def test_unimodular_T_is_empty_and_out_of_domain():
    T = SymForm.diagonal([1, 1, 1])
    assert classify_cycle(T, C3).locus == "empty"
    assert not e_p(parse_form("1,1,1", C3)).in_domain
    with pytest.raises(e.NotRegular):
        e.degree_factor(T, 1, C3)
