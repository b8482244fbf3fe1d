"""Exact arithmetic over Z_p, its unramified quadratic extension, and the
associated characters and Hilbert symbols.

Two flavours of the quadratic extension are provided:

* :class:`QuadExtScalar` -- an element of Z_{p^2} = Z_p[delta] known modulo
  p^t, built from a pair of :class:`PadicScalar` coordinates;
* :class:`QuadNumber` -- an exact element of Q(delta), delta^2 = Delta, viewed
  inside Q_{p^2}.  Since p is inert in Q(delta) the valuation is simply the
  minimum of the coordinate valuations.  Tree computations use this one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Rational = Union[int, Fraction]

INF = math.inf
REAL = "inf"


class PrimeError(ValueError):
    pass


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def legendre(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    return 1 if pow(a, (p - 1) // 2, p) == 1 else -1


def smallest_nonresidue(p: int) -> int:
    for d in range(2, p):
        if legendre(d, p) == -1:
            return d
    raise PrimeError(f"no non-residue mod {p}")


@dataclass(frozen=True)
class PrimeContext:
    """An odd prime with a fixed non-square unit Delta."""

    p: int
    delta: int
    precision: int = 6

    def __post_init__(self):
        if self.p == 2 or not is_prime(self.p):
            raise PrimeError(f"p={self.p} must be an odd prime")
        if not 1 < self.delta < self.p or legendre(self.delta, self.p) != -1:
            raise PrimeError(f"Delta={self.delta} is not a non-square unit mod {self.p}")
        if self.precision < 1:
            raise PrimeError("precision must be positive")

    @classmethod
    def create(cls, p: int, delta: int | None = None, precision: int = 6) -> "PrimeContext":
        if p == 2 or not is_prime(p):
            raise PrimeError(f"p={p} must be an odd prime")
        return cls(p, smallest_nonresidue(p) if delta is None else delta, precision)

    def chi(self, u: Rational) -> int:
        return chi(u, self.p)

    def unit_class(self, u: Rational) -> int:
        """Canonical representative (1 or Delta) of the square class of a unit."""
        return 1 if chi(u, self.p) == 1 else self.delta


def as_fraction(q: Rational | str) -> Fraction:
    return q if isinstance(q, Fraction) else Fraction(q)


def ordp(q: Rational, p: int) -> int | float:
    """p-adic valuation of a rational; +inf for zero."""
    q = as_fraction(q)
    if q == 0:
        return INF
    v = 0
    num, den = q.numerator, q.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def unit_part(q: Rational, p: int) -> Fraction:
    q = as_fraction(q)
    v = ordp(q, p)
    if v == INF:
        raise ValueError("zero has no unit part")
    return q / Fraction(p) ** v


def mod_pt(q: Rational, p: int, t: int) -> int:
    """Residue of a p-integral rational modulo p^t."""
    q = as_fraction(q)
    if q.denominator % p == 0:
        raise ValueError(f"{q} is not {p}-integral")
    m = p**t
    return q.numerator * pow(q.denominator, -1, m) % m


def chi(u: Rational, p: int) -> int:
    """Quadratic residue character of a p-adic unit."""
    u = as_fraction(u)
    if u == 0 or ordp(u, p) != 0:
        raise ValueError(f"{u} is not a {p}-adic unit")
    return legendre(u.numerator * u.denominator, p)


def _hilbert_odd(a: Fraction, b: Fraction, p: int) -> int:
    alpha, beta = ordp(a, p), ordp(b, p)
    u, v = unit_part(a, p), unit_part(b, p)
    sign = -1 if (alpha * beta) % 2 and p % 4 == 3 else 1
    if beta % 2:
        sign *= chi(u, p)
    if alpha % 2:
        sign *= chi(v, p)
    return sign


def _hilbert_two(a: Fraction, b: Fraction) -> int:
    alpha, beta = ordp(a, 2), ordp(b, 2)
    u, v = unit_part(a, 2), unit_part(b, 2)
    # units of Z_2 only matter modulo 8
    u = u.numerator * u.denominator % 8
    v = v.numerator * v.denominator % 8

    def eps(x):
        return ((x - 1) // 2) % 2

    def omega(x):
        return ((x * x - 1) // 8) % 2

    e = eps(u) * eps(v) + alpha * omega(v) + beta * omega(u)
    return -1 if e % 2 else 1


def hilbert_symbol(a: Rational, b: Rational, place: int | str) -> int:
    """Hilbert symbol (a, b)_v at a prime v or at the real place ``"inf"``."""
    a, b = as_fraction(a), as_fraction(b)
    if a == 0 or b == 0:
        raise ValueError("Hilbert symbol needs nonzero arguments")
    if place == REAL or place == math.inf:
        return -1 if a < 0 and b < 0 else 1
    if place == 2:
        return _hilbert_two(a, b)
    return _hilbert_odd(a, b, int(place))


def prime_support(*qs: Rational) -> set[int]:
    """Primes dividing the numerator or denominator of any argument."""
    out: set[int] = set()
    for q in qs:
        q = as_fraction(q)
        for n in (abs(q.numerator), q.denominator):
            f = 2
            while f * f <= n:
                while n % f == 0:
                    out.add(f)
                    n //= f
                f += 1
            if n > 1:
                out.add(n)
    return out


def relevant_places(*qs: Rational) -> list:
    """Places at which a symbol of the given arguments can be nontrivial."""
    return sorted(prime_support(*qs) | {2}) + [REAL]


# ---------------------------------------------------------------------------
# Truncated p-adic scalars


@dataclass(frozen=True)
class PadicScalar:
    """p^valuation * unit, with the unit known modulo p^precision.

    The valuation is exact even when the unit is truncated.  Zero is stored
    with valuation +inf and unit 0.
    """

    p: int
    valuation: int | float
    unit: int
    precision: int

    def __post_init__(self):
        if self.valuation == INF:
            if self.unit != 0:
                raise ValueError("zero must have unit 0")
        elif self.unit % self.p == 0:
            raise ValueError("unit part must be prime to p")

    @classmethod
    def zero(cls, p: int, precision: int) -> "PadicScalar":
        return cls(p, INF, 0, precision)

    @classmethod
    def from_rational(cls, q: Rational, p: int, precision: int) -> "PadicScalar":
        q = as_fraction(q)
        if q == 0:
            return cls.zero(p, precision)
        return cls(p, ordp(q, p), mod_pt(unit_part(q, p), p, precision), precision)

    @classmethod
    def from_residue(cls, r: int, p: int, precision: int) -> "PadicScalar":
        """Scalar from an integer residue modulo p^precision."""
        r %= p**precision
        if r == 0:
            return cls.zero(p, precision)
        v = 0
        while r % p == 0:
            r //= p
            v += 1
        return cls(p, v, r % p ** (precision - v), precision - v)

    def is_zero(self) -> bool:
        return self.valuation == INF

    def truncate(self, t: int) -> "PadicScalar":
        if t > self.precision:
            raise ValueError("cannot increase precision by truncation")
        if self.is_zero():
            return PadicScalar.zero(self.p, t)
        return PadicScalar(self.p, self.valuation, self.unit % self.p**t, t)

    def residue(self, t: int) -> int:
        """Integer representative modulo p^t (requires valuation >= 0)."""
        if self.is_zero():
            return 0
        if self.valuation < 0:
            raise ValueError("negative valuation has no residue")
        if self.valuation >= t:
            return 0
        return self.unit * self.p**self.valuation % self.p**t

    def absolute_precision(self) -> int | float:
        if self.is_zero():
            return self.precision
        return self.valuation + self.precision

    def __mul__(self, other: "PadicScalar") -> "PadicScalar":
        t = min(self.precision, other.precision)
        if self.is_zero() or other.is_zero():
            return PadicScalar.zero(self.p, t)
        return PadicScalar(self.p, self.valuation + other.valuation,
                           self.unit * other.unit % self.p**t, t)

    def __neg__(self) -> "PadicScalar":
        if self.is_zero():
            return self
        return PadicScalar(self.p, self.valuation, -self.unit % self.p**self.precision,
                           self.precision)

    def __add__(self, other: "PadicScalar") -> "PadicScalar":
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        base = min(self.valuation, other.valuation)
        t = int(min(self.absolute_precision(), other.absolute_precision()) - base)
        m = self.p**t
        r = (self.unit * self.p ** (self.valuation - base)
             + other.unit * self.p ** (other.valuation - base)) % m
        s = PadicScalar.from_residue(r, self.p, t)
        if s.is_zero():
            return s
        return PadicScalar(self.p, s.valuation + base, s.unit, s.precision)

    def __sub__(self, other: "PadicScalar") -> "PadicScalar":
        return self + (-other)

    def inverse(self) -> "PadicScalar":
        if self.is_zero():
            raise ZeroDivisionError
        return PadicScalar(self.p, -self.valuation,
                           pow(self.unit, -1, self.p**self.precision), self.precision)

    def congruent(self, other: "PadicScalar", t: int) -> bool:
        """Equality of integral scalars modulo p^t."""
        return self.residue(t) == other.residue(t)


@dataclass(frozen=True)
class QuadExtScalar:
    """x + y*delta in Z_{p^2} = Z_p[delta]/(delta^2 - Delta), modulo p^t."""

    x: PadicScalar
    y: PadicScalar
    delta: int

    @property
    def p(self) -> int:
        return self.x.p

    @property
    def precision(self) -> int:
        return int(min(self.x.absolute_precision(), self.y.absolute_precision()))

    @classmethod
    def from_ints(cls, x: int, y: int, ctx: PrimeContext, t: int) -> "QuadExtScalar":
        return cls(PadicScalar.from_residue(x, ctx.p, t),
                   PadicScalar.from_residue(y, ctx.p, t), ctx.delta)

    def residues(self, t: int) -> tuple[int, int]:
        return self.x.residue(t), self.y.residue(t)

    def _make(self, x: int, y: int, t: int) -> "QuadExtScalar":
        return QuadExtScalar(PadicScalar.from_residue(x, self.p, t),
                             PadicScalar.from_residue(y, self.p, t), self.delta)

    def __mul__(self, other: "QuadExtScalar") -> "QuadExtScalar":
        t = min(self.precision, other.precision)
        a, b = self.residues(t)
        c, d = other.residues(t)
        m = self.p**t
        return self._make((a * c + self.delta * b * d) % m, (a * d + b * c) % m, t)

    def __add__(self, other: "QuadExtScalar") -> "QuadExtScalar":
        t = min(self.precision, other.precision)
        a, b = self.residues(t)
        c, d = other.residues(t)
        return self._make(a + c, b + d, t)

    def conjugate(self) -> "QuadExtScalar":
        t = self.precision
        a, b = self.residues(t)
        return self._make(a, -b, t)

    def norm(self) -> PadicScalar:
        t = self.precision
        a, b = self.residues(t)
        return PadicScalar.from_residue(a * a - self.delta * b * b, self.p, t)

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuadExtScalar):
            return NotImplemented
        t = min(self.precision, other.precision)
        return self.residues(t) == other.residues(t)

    def __hash__(self):
        return hash(self.residues(self.precision))


def _hensel_sqrt(c: int, p: int, t: int) -> int | None:
    """Square root of c modulo p^t, for c a unit; None if c is a non-residue."""
    c %= p**t
    if legendre(c, p) != 1:
        return None
    r = next(x for x in range(1, p) if (x * x - c) % p == 0)
    m = p
    for _ in range(1, t):
        m *= p
        # Newton step: r <- r - (r^2 - c) / (2r)
        r = (r - (r * r - c) * pow(2 * r, -1, m)) % m
    return r % p**t


def sqrt_mod_pt(c: int, p: int, t: int) -> int | None:
    return _hensel_sqrt(c, p, t)


def quad_ext_norm_preimage(eps: Rational, ctx: PrimeContext, t: int | None = None) -> QuadExtScalar:
    """A unit u of Z_{p^2} with Nm(u) = eps mod p^t.

    The norm map on units of an unramified extension is surjective onto
    Z_p^x, so a preimage always exists: solve mod p, then Hensel-lift one
    coordinate.
    """
    t = ctx.precision if t is None else t
    p, D = ctx.p, ctx.delta
    e = mod_pt(eps, p, t)
    if e % p == 0:
        raise ValueError("norm preimage requires a unit")
    m = p**t
    for x0 in range(p):
        for y0 in range(p):
            if (x0 * x0 - D * y0 * y0 - e) % p:
                continue
            if x0:
                # x^2 = e + D y0^2 with y fixed
                x = _hensel_sqrt((e + D * y0 * y0) % m, p, t)
                return QuadExtScalar.from_ints(x, y0, ctx, t)
            # y^2 = -e / D, x = 0
            y = _hensel_sqrt(-e * pow(D, -1, m) % m, p, t)
            return QuadExtScalar.from_ints(0, y, ctx, t)
    raise AssertionError("norm map on units is surjective")


# ---------------------------------------------------------------------------
# Exact elements of Q(delta) inside Q_{p^2}


class QuadNumber:
    """Exact a + b*delta with rational a, b and delta^2 = Delta."""

    __slots__ = ("a", "b", "delta")

    def __init__(self, a: Rational = 0, b: Rational = 0, delta: int = 0):
        self.a = as_fraction(a)
        self.b = as_fraction(b)
        self.delta = delta

    def _lift(self, other) -> "QuadNumber":
        if isinstance(other, QuadNumber):
            return other
        return QuadNumber(other, 0, self.delta)

    def __add__(self, other):
        o = self._lift(other)
        return QuadNumber(self.a + o.a, self.b + o.b, self.delta)

    __radd__ = __add__

    def __neg__(self):
        return QuadNumber(-self.a, -self.b, self.delta)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, other):
        o = self._lift(other)
        return QuadNumber(self.a * o.a + self.delta * self.b * o.b,
                          self.a * o.b + self.b * o.a, self.delta)

    __rmul__ = __mul__

    def conj(self) -> "QuadNumber":
        return QuadNumber(self.a, -self.b, self.delta)

    def norm(self) -> Fraction:
        return self.a * self.a - self.delta * self.b * self.b

    def inverse(self) -> "QuadNumber":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError
        return QuadNumber(self.a / n, -self.b / n, self.delta)

    def __truediv__(self, other):
        return self * self._lift(other).inverse()

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def valuation(self, p: int) -> int | float:
        return min(ordp(self.a, p), ordp(self.b, p))

    def residue(self, p: int, n: int) -> tuple[int, int]:
        """Coordinates modulo p^n of an integral element."""
        return mod_pt(self.a, p, n), mod_pt(self.b, p, n)

    def __eq__(self, other):
        o = self._lift(other)
        return self.a == o.a and self.b == o.b

    def __hash__(self):
        return hash((self.a, self.b))

    def __repr__(self):
        return f"({self.a} + {self.b}*d)"
