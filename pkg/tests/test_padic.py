import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from localcycles.padic import (
    INF,
    REAL,
    PadicScalar,
    PrimeContext,
    PrimeError,
    QuadExtScalar,
    QuadNumber,
    chi,
    hilbert_symbol,
    ordp,
    quad_ext_norm_preimage,
    relevant_places,
)

ODD_PRIMES = [3, 5, 7, 11, 13]


def squares_mod(p):
    return {x * x % p for x in range(1, p)}


def solvable_mod(a, b, p, t):
    """Primitive solution of a x^2 + b y^2 = z^2 mod p^t, a, b integers."""
    m = p**t
    for x in range(m):
        for y in range(m):
            lhs = (a * x * x + b * y * y) % m
            for z in range(m):
                if (x % p or y % p or z % p) and (lhs - z * z) % m == 0:
                    return True
    return False


def test_context_defaults():
    c = PrimeContext.create(3)
    assert (c.p, c.delta) == (3, 2)
    assert PrimeContext.create(7).delta == 3
    assert pow(c.delta, (c.p - 1) // 2, c.p) == c.p - 1


@pytest.mark.parametrize("p,delta", [(2, None), (9, None), (5, 4), (7, 2), (5, 1)])
def test_context_rejects(p, delta):
    with pytest.raises(PrimeError):
        PrimeContext.create(p, delta)


def test_ordp_examples():
    assert ordp(Fraction(9, 2), 3) == 2
    assert ordp(0, 3) == INF and math.isinf(ordp(0, 3))
    assert ordp(Fraction(3, 25), 5) == -2


def test_chi_examples():
    assert chi(2, 3) == -1
    assert chi(1, 7) == 1
    assert chi(4, 5) == 1
    with pytest.raises(ValueError):
        chi(3, 3)


@pytest.mark.parametrize("p", ODD_PRIMES)
def test_chi_against_square_table(p):
    sq = squares_mod(p)
    for u in range(1, p):
        assert chi(u, p) == (1 if u in sq else -1)


@given(st.sampled_from(ODD_PRIMES), st.integers(1, 10**6), st.integers(1, 10**6))
def test_chi_multiplicative(p, u, v):
    if u % p == 0 or v % p == 0:
        return
    assert chi(u * v, p) == chi(u, p) * chi(v, p)


@pytest.mark.parametrize("p", [3, 5])
def test_hilbert_symbol_matches_bruteforce(p):
    # all square classes of Q_p^x: u, D, p u, p D
    D = PrimeContext.create(p).delta
    reps = [1, D, p, p * D]
    for a in reps:
        for b in reps:
            want = 1 if solvable_mod(a, b, p, 3 if p == 3 else 2) else -1
            assert hilbert_symbol(a, b, p) == want, (a, b)


def test_hilbert_symbol_examples():
    assert hilbert_symbol(1, 7, 3) == 1
    assert hilbert_symbol(-1, -1, REAL) == -1
    assert hilbert_symbol(3, 2, 3) == -1
    # frozen values at 2
    assert hilbert_symbol(-1, -1, 2) == -1
    assert hilbert_symbol(2, 3, 2) == -1
    assert hilbert_symbol(2, 2, 2) == 1
    assert hilbert_symbol(5, 2, 2) == -1
    assert hilbert_symbol(3, 5, 2) == 1
    with pytest.raises(ValueError):
        hilbert_symbol(0, 1, 3)


nonzero = st.fractions(min_value=-500, max_value=500, max_denominator=60).filter(lambda q: q != 0)


@given(nonzero, nonzero)
def test_hilbert_product_formula(a, b):
    prod = 1
    for v in relevant_places(a, b):
        prod *= hilbert_symbol(a, b, v)
    assert prod == 1


@given(nonzero, nonzero, nonzero, st.sampled_from([2, 3, 5, 7, REAL]))
def test_hilbert_bimultiplicative(a, b, c, v):
    assert hilbert_symbol(a, b * c, v) == hilbert_symbol(a, b, v) * hilbert_symbol(a, c, v)
    assert hilbert_symbol(a, b, v) == hilbert_symbol(b, a, v)


def test_padic_scalar_basics():
    x = PadicScalar.from_rational(Fraction(18, 5), 3, 4)
    assert x.valuation == 2
    assert x.residue(4) == 18 * pow(5, -1, 81) % 81
    z = PadicScalar.zero(3, 4)
    assert z.is_zero()
    assert (x + z).residue(4) == x.residue(4)


@given(st.integers(-10**6, 10**6), st.integers(-10**6, 10**6), st.integers(1, 6))
def test_padic_precision_coherence(a, b, t):
    p = 3
    x, y = PadicScalar.from_rational(a, p, t + 1), PadicScalar.from_rational(b, p, t + 1)
    xs, ys = PadicScalar.from_rational(a, p, t), PadicScalar.from_rational(b, p, t)
    m = p**t
    assert (x * y).residue(t) == (xs * ys).residue(t) == a * b % m
    assert (x + y).residue(t) == (xs + ys).residue(t) == (a + b) % m


@pytest.mark.parametrize("eps", [1, 2, 4, 5, 7, 8, 13, 25])
def test_norm_preimage(eps):
    c = PrimeContext.create(3)
    u = quad_ext_norm_preimage(eps, c, 5)
    assert u.norm().residue(5) == eps % 3**5


def test_norm_preimage_examples(c3):
    u = quad_ext_norm_preimage(1, c3, 4)
    assert u.norm().residue(4) == 1
    u = quad_ext_norm_preimage(4, c3, 4)  # eps = 2^2
    assert u.norm().residue(4) == 4
    with pytest.raises(ValueError):
        quad_ext_norm_preimage(3, c3, 4)


def test_quad_ext_multiplicative_exhaustive(c3):
    # all pairs mod p^2 for p = 3
    t = 2
    m = 9
    els = [QuadExtScalar.from_ints(x, y, c3, t) for x in range(m) for y in range(m)]
    sample = els[::7]
    for u in sample:
        for v in els:
            uv = u * v
            assert uv.norm().residue(t) == (u.norm() * v.norm()).residue(t)
            assert uv.conjugate() == u.conjugate() * v.conjugate()
        assert u.conjugate().conjugate() == u


@given(st.fractions(max_denominator=20), st.fractions(max_denominator=20),
       st.fractions(max_denominator=20), st.fractions(max_denominator=20))
def test_quadnumber_field_ops(a, b, c, d):
    x, y = QuadNumber(a, b, 2), QuadNumber(c, d, 2)
    assert (x * y).norm() == x.norm() * y.norm()
    assert (x * y).conj() == x.conj() * y.conj()
    if not y.is_zero():
        assert (x / y) * y == x
