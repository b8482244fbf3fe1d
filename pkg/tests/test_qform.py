from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from localcycles.density import density_bruteforce, named_form
from localcycles.padic import REAL, PrimeContext, chi
from localcycles.qform import (
    DiagonalForm,
    FormError,
    NotIntegral,
    SymForm,
    diagonalize,
    local_invariants,
    parse_entry,
    parse_form,
    quaternion_invariant,
    represents_in,
    represents_locally,
    space_entries,
    twisted_space_criterion,
)

C3 = PrimeContext.create(3)
C5 = PrimeContext.create(5)


def unimodular(ops, n):
    """Integer matrix of determinant +-1 from a list of elementary operations."""
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    for i, j, f in ops:
        i, j = i % n, j % n
        if i == j:
            continue
        for k in range(n):
            U[i][k] += f * U[j][k]
    return U


ops_strategy = st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(-3, 3)),
                        max_size=8)
diag_strategy = st.lists(st.tuples(st.integers(0, 3), st.sampled_from([1, 2])),
                         min_size=1, max_size=4)


def test_parse_entries(c3):
    assert parse_entry("1", c3) == 1
    assert parse_entry("D", c3) == c3.delta
    assert parse_entry("-D", c3) == -c3.delta
    assert parse_entry("p", c3) == 3
    assert parse_entry("D*p^2", c3) == 9 * c3.delta
    assert parse_entry("9/2", c3) == Fraction(9, 2)
    assert parse_entry("-p", c3) == -3


@pytest.mark.parametrize("bad", ["", "x", "p^", "0", "1,,1"])
def test_parse_rejects(bad, c3):
    with pytest.raises(FormError):
        parse_form(bad, c3)


def test_canonical_units(c3):
    # -1 is a non-square mod 3, so <1> + <-1> has determinant class Delta
    assert DiagonalForm.from_entries(c3, [1, -1]).units == (1, c3.delta)
    assert parse_form("D,D", c3) == parse_form("1,1", c3)
    assert parse_form("p,D,1", c3).exponents == (0, 0, 1)


def test_diagonalize_identity(c3):
    D = diagonalize(SymForm.diagonal([1, 1, 1]), c3)
    assert D.exponents == (0, 0, 0)
    assert D.units == (1, 1, 1)


@pytest.mark.parametrize("ctx", [C3, C5], ids=["p3", "p5"])
def test_diagonalize_hyperbolic_plane(ctx):
    D = diagonalize(SymForm.from_rows([[0, 1], [1, 0]]), ctx)
    assert D.exponents == (0, 0)
    assert D.det_unit_class() == chi(-1, ctx.p)


def test_diagonalize_roundtrip(c3):
    base = DiagonalForm.make(c3, [0, 0, 1], [1, c3.delta, 1])
    U = [[2, 1, 0], [1, 1, 3], [0, 3, 1]]
    T = base.symform().conjugate(U)
    D = diagonalize(T, c3)
    assert D.exponents == (0, 0, 1)
    assert D.units == (1, c3.delta, 1)


def test_diagonalize_rejects_denominators(c3):
    T = SymForm.from_rows([[Fraction(1, 3), 1], [1, 6]])
    with pytest.raises(NotIntegral):
        diagonalize(T, c3)


def test_diagonalize_offdiagonal_pivot(c3):
    # no unit on the diagonal: the pivot is the off-diagonal entry 3
    T = SymForm.from_rows([[9, 3], [3, 9]])
    D = diagonalize(T, c3)
    assert D.exponents == (1, 1)
    assert D.det_exponent() == 2  # det = 72 = 8 * 9


@given(diag_strategy, ops_strategy)
def test_diagonalize_is_conjugation_invariant(entries, ops):
    D = DiagonalForm.make(C3, [a for a, _ in entries], [u for _, u in entries])
    U = unimodular(ops, D.n)
    assert diagonalize(D.symform().conjugate(U), C3) == D


@given(diag_strategy)
def test_diagonalize_idempotent(entries):
    D = DiagonalForm.make(C5, [a for a, _ in entries], [u for _, u in entries])
    assert diagonalize(D.symform(), C5) == D


def test_local_invariants(c3):
    assert local_invariants(parse_form("1,1,1", c3)).hasse == 1
    S = local_invariants(named_form(c3, "S"))
    assert (S.det_exponent, S.det_unit_class) == (0, -1)
    Sp = local_invariants(named_form(c3, "S'"))
    assert (Sp.det_exponent, Sp.det_unit_class) == (2, -1)
    # S and S' are the two rank-4 spaces of the same discriminant
    assert S.hasse == -Sp.hasse


def test_represents_locally_examples(c3):
    D = parse_form("1,1,1", c3)
    assert not represents_locally(D, "V'")
    assert represents_locally(D, "V")
    # the exponent sum is odd for diag(p,p,p); the criterion decides V'
    ppp = parse_form("p,p,p", c3)
    assert represents_locally(ppp, "V'") != represents_locally(ppp, "V")


@given(st.sampled_from([C3, C5]),
       st.lists(st.integers(0, 4), min_size=3, max_size=3),
       st.lists(st.sampled_from([1, 2]), min_size=3, max_size=3))
def test_exactly_one_space_represents(ctx, exps, us):
    D = DiagonalForm.make(ctx, exps, [ctx.delta if u == 2 else 1 for u in us])
    inV = represents_in(D.entries(), space_entries(ctx, "V"), ctx.p)
    inVp = represents_in(D.entries(), space_entries(ctx, "V'"), ctx.p)
    assert inV != inVp
    assert inVp == twisted_space_criterion(D)


@pytest.mark.parametrize("label", ["1,1,p", "1,D,p", "1,p,p", "1,p,D*p", "1,1,1", "1,1,D"])
def test_represents_matches_density_positivity(label, c3):
    T = parse_form(label, c3)
    for space, name in (("V", "S"), ("V'", "S'")):
        dens = density_bruteforce(named_form(c3, name), T.symform(), 2, check_next=False).density
        assert (dens > 0) == represents_locally(T, space), (label, space)


def test_quaternion_invariant_examples():
    assert quaternion_invariant(1, 1, 1) == {2, REAL}
    assert quaternion_invariant(1, -1, 1) == set()
    assert quaternion_invariant(3, 1, 1) == {3, REAL}


@given(st.integers(-40, 40).filter(bool), st.integers(-40, 40).filter(bool),
       st.integers(-40, 40).filter(bool))
def test_quaternion_ramification_is_even(a, b, c):
    assert len(quaternion_invariant(a, b, c)) % 2 == 0


def test_symform_validation():
    with pytest.raises(ValueError):
        SymForm.from_rows([[1, 2], [3, 4]])
    T = SymForm.from_json("[[1,0],[0,3]]")
    assert T.det() == 3
    assert T.value([1, 1]) == 4
