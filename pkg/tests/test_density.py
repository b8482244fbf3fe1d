from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from localcycles import density as d
from localcycles.density import DensityPolynomial
from localcycles.lengths import e_p
from localcycles.padic import PrimeContext, chi
from localcycles.qform import DiagonalForm, FormError, SymForm, parse_form, represents_locally

C3 = PrimeContext.create(3)
C5 = PrimeContext.create(5)


def form(label, ctx=C3):
    return parse_form(label, ctx)


# ---------------------------------------------------------------------------
# brute-force oracle


def test_bruteforce_unit_square():
    res = d.density_bruteforce(form("1"), SymForm.diagonal([1]), 3)
    assert res.count == 2  # x = +-1 mod 27
    assert res.density == 2
    assert res.stabilized


@pytest.mark.parametrize("ctx", [C3, C5], ids=["p3", "p5"])
@pytest.mark.parametrize("eps", ["1", "D"])
def test_bruteforce_unary_S(ctx, eps):
    T = form(eps, ctx).symform()
    res = d.density_bruteforce(d.named_form(ctx, "S"), T, 2)
    assert res.stabilized
    assert res.density == 1 + Fraction(1, ctx.p**2)


def test_bruteforce_budget_is_explicit():
    with pytest.raises(d.BudgetExceeded):
        d.density_bruteforce(d.named_form(C3, "S"), form("1,p,p").symform(), 6, check_next=False)


def test_bruteforce_rejects_bad_input():
    with pytest.raises(FormError):
        d.density_bruteforce(form("1"), form("1,1").symform(), 2)
    with pytest.raises(ValueError):
        d.density_bruteforce(form("1"), form("1").symform(), 0)


# ---------------------------------------------------------------------------
# closed forms and polynomial arithmetic


def test_closed_form_unary_values():
    p = Fraction(3)
    assert d.closed_form_unary(C3, "H4", C3.delta).coeffs == (1, -p**-2)
    assert d.closed_form_unary(C3, "S", 1).coeffs == (1, p**-2)
    assert d.closed_form_unary(C3, "S'", 1).coeffs == (1 - 1 / p,)
    assert d.closed_form_unary(C3, "S~'", 1).coeffs == (1 + chi(-1, 3) / p,)


@pytest.mark.parametrize("ctx", [C3, C5], ids=["p3", "p5"])
@pytest.mark.parametrize("name,r", [("S", 0), ("S", 1), ("H4", 0), ("H4", 1), ("S'", 0), ("S~'", 0)])
def test_closed_form_unary_matches_recursion(ctx, name, r):
    S = d.with_hyperbolic(d.named_form(ctx, name), r)
    X = Fraction(1, ctx.p**r)
    for eps in (1, ctx.delta):
        assert d.unary_density(S, eps) == d.closed_form_unary(ctx, name, eps)(X)


def test_derivative_at_one():
    assert d.derivative_at_one(DensityPolynomial.of(7)) == 0
    assert d.derivative_at_one(DensityPolynomial.of(1, Fraction(1, 9))) == Fraction(1, 9)
    assert d.derivative_at_one(DensityPolynomial.of(0, 0, 1)) == 2


polys = st.lists(st.fractions(min_value=-5, max_value=5, max_denominator=9),
                 min_size=1, max_size=5).map(lambda c: DensityPolynomial(tuple(c)))


@given(polys, polys.filter(lambda q: any(q.coeffs)))
def test_exact_division_inverts_product(a, b):
    assert (a * b).exact_div(b) == a


@given(polys, polys.filter(lambda q: any(q.coeffs)))
def test_divmod_identity(a, b):
    q, r = a.divmod(b)
    assert q * b + r == a
    assert r.degree < b.degree or not any(r.coeffs)


def test_inexact_division_raises():
    with pytest.raises(ArithmeticError):
        DensityPolynomial.of(1, 0, 1).exact_div(DensityPolynomial.of(1, 1))


# ---------------------------------------------------------------------------
# unary recursion vs counting


@given(st.sampled_from([C3, C5]),
       st.lists(st.tuples(st.integers(0, 2), st.booleans()), min_size=1, max_size=3),
       st.integers(0, 2), st.booleans())
def test_unary_density_matches_bruteforce(ctx, s_entries, k, eps_delta):
    if ctx.p == 5:
        k = min(k, 1)
    S = DiagonalForm.make(ctx, [a for a, _ in s_entries],
                          [ctx.delta if u else 1 for _, u in s_entries])
    c = (ctx.delta if eps_delta else 1) * ctx.p**k
    res = d.density_bruteforce(S, SymForm.diagonal([c]), 2 * k + 3)
    assert res.stabilized
    assert d.unary_density(S, c) == res.density


def test_unary_density_of_nonintegral_is_zero():
    assert d.unary_density(form("1,1"), Fraction(1, 3)) == 0


# ---------------------------------------------------------------------------
# reduction


@pytest.mark.parametrize("S_label,T_label,t,expected", [
    ("1,1,p", "1,p", 2, Fraction(8, 3)),
    ("1,1,1,D", "1,p", 2, Fraction(80, 81)),
    ("1,D,p", "1,D*p", 2, Fraction(0)),
    ("1,1,1", "D,p^2", 3, Fraction(8, 3)),
    ("1,p,p,D*p", "1,p", 2, Fraction(8)),
])
def test_reduce_matches_bruteforce(S_label, T_label, t, expected):
    S, T = form(S_label), form(T_label)
    red = d.reduce(S, T, bruteforce_t=3)
    brute = d.density_bruteforce(S, T.symform(), t)
    assert brute.stabilized
    assert red.value() == brute.density == expected


def test_reduce_splitting_rule_numerically():
    # alpha(N + M, N + L) = alpha(N + M, N) alpha(M, L) for N = <1>, M = diag(1, -Delta)
    NM = DiagonalForm.from_entries(C3, [1, 1, -C3.delta])
    M = DiagonalForm.from_entries(C3, [1, -C3.delta])
    for L in (3, 9, 3 * C3.delta, 9 * C3.delta):
        lhs = d.density_bruteforce(NM, SymForm.diagonal([1, L]), 3).density
        rhs = (d.density_bruteforce(NM, SymForm.diagonal([1]), 3).density
               * d.density_bruteforce(M, SymForm.diagonal([L]), 3).density)
        assert lhs == rhs
        assert d.reduce(NM, DiagonalForm.from_entries(C3, [1, L])).value() == lhs


def test_reduce_needs_unimodular_block():
    with pytest.raises(d.NotReducible):
        d.reduce(d.named_form(C3, "S"), form("p,p,p"))


def test_reduce_factors_are_labelled():
    red = d.reduce(d.named_form(C3, "S'"), form("1,p,p"))
    assert red.complete
    assert {f.method for f in red.factors} <= {"unary", "scaling"}
    assert all(f.label for f in red.factors)


TWISTED = [(ctx, label) for ctx in (C3, C5)
           for label in ("1,p,p", "D,p,p", "D,p,p^2", "1,p,p^3", "D,1,p", "1,D,p", "D,D*p,p",
                         "1,1,p", "1,p,D*p", "1,D*p,p^2", "1,p^2,p^3", "1,p,p^2")
           if represents_locally(form(label, ctx), "V'")]


def test_twisted_sweep_covers_both_primes():
    assert sum(ctx is C3 for ctx, _ in TWISTED) >= 4
    assert sum(ctx is C5 for ctx, _ in TWISTED) >= 4


@pytest.mark.parametrize("ctx,label", TWISTED, ids=[f"p{c.p}-{l}" for c, l in TWISTED])
def test_twisted_density_closed_value(ctx, label):
    T = form(label, ctx)
    p = Fraction(ctx.p)
    assert d.reduce(d.named_form(ctx, "S'"), T).value() == 2 / p * (p * p - 1)


@pytest.mark.parametrize("label", ["1,p,p", "D,p,p", "D,p,p^2", "D,1,p", "D,p^2,p^3"])
def test_unimodular_twist_closed_value(label):
    T = form(label)
    p = Fraction(3)
    value = d.reduce(d.named_form(C3, "S~'"), T).value()
    assert value == 2 * (1 + chi(-1, 3) / p) * (p + 1)


@pytest.mark.parametrize("label", ["1,p,D*p", "1,1,p", "1,p,p^2"])
def test_twisted_density_vanishes_off_the_space(label):
    assert d.reduce(d.named_form(C3, "S'"), form(label)).value() == 0


# ---------------------------------------------------------------------------
# Kitaoka polynomials and the assembled A_{S,T}


def test_kitaoka_examples():
    T = form("1,1,p")  # a2 = 0, a3 = 1, sigma = -1
    assert d.kitaoka_signs(T) == (-1, -1)
    assert d.kitaoka_H4(T)(1) == 0
    assert d.derivative_at_one(d.kitaoka_quotient(T)) == -e_p(T).value == -1
    T = form("1,p,p")  # a2 = a3 = 1, chi(T) = -1
    assert d.kitaoka_signs(T)[1] == -1
    assert d.derivative_at_one(d.kitaoka_quotient(T)) == -2


@pytest.mark.parametrize("label", ["1,p,p", "1,p,D*p", "1,D,p"])
def test_kitaoka_matches_bruteforce(label):
    T = form(label)
    brute = d.density_bruteforce(d.named_form(C3, "H4"), T.symform(), 2, check_next=False)
    assert d.kitaoka_H4(T)(1) == brute.density


def test_kitaoka_rejects_nonunimodular_lead():
    with pytest.raises(FormError):
        d.kitaoka_signs(form("p,p,p"))


@pytest.mark.parametrize("label,expected", [
    ("1,1,p", Fraction(160, 81)),
    ("1,D,p", Fraction(0)),
    ("1,p,D*p", Fraction(160, 81)),
    ("1,1,1", Fraction(80, 81)),
    ("1,1,D", Fraction(80, 81)),
])
def test_assembled_A_at_one_matches_bruteforce(label, expected):
    T = form(label)
    brute = d.density_bruteforce(d.named_form(C3, "S"), T.symform(), 2, check_next=False)
    assert d.assembled_A(T, "S")(1) == brute.density == expected


def test_assembled_A_vanishes_on_twisted_forms():
    for label in ("1,p,p", "D,p,p^2", "1,p,p^3"):
        T = form(label)
        assert represents_locally(T, "V'")
        assert d.assembled_A(T, "S")(1) == 0


def test_named_form_unknown():
    with pytest.raises(FormError):
        d.named_form(C3, "nope")
