"""Quadratic forms over Z_(p): Jordan diagonalization, local invariants and
representability.

Convention: a form is stored by its half-Gram matrix S, so that
Q(x) = x^t S x and S_ij = B(x_i, x_j) with B(x, x) = Q(x).  A full Gram
matrix ((x_i, x_j)) with (x, x) = 2Q(x) is halved on input.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .padic import (
    INF,
    REAL,
    PrimeContext,
    as_fraction,
    chi,
    hilbert_symbol,
    ordp,
    prime_support,
    unit_part,
)


class FormError(ValueError):
    pass


class NotIntegral(FormError):
    """The form has an entry with a p in the denominator."""


def parse_rational(s: str | int | Fraction) -> Fraction:
    if isinstance(s, (int, Fraction)):
        return Fraction(s)
    try:
        return Fraction(s.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise FormError(f"bad rational {s!r}; expected 'num/den'") from exc


def fmt_rational(q: Fraction | int) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class SymForm:
    """Symmetric matrix of rationals in the half-Gram convention."""

    gram: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        n = len(self.gram)
        if any(len(row) != n for row in self.gram):
            raise FormError("Gram matrix must be square")
        for i in range(n):
            for j in range(i):
                if self.gram[i][j] != self.gram[j][i]:
                    raise FormError("Gram matrix must be symmetric")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], convention: str = "half") -> "SymForm":
        if convention not in ("half", "full"):
            raise FormError("convention must be 'half' or 'full'")
        scale = Fraction(1, 2) if convention == "full" else Fraction(1)
        return cls(tuple(tuple(parse_rational(x) * scale for x in row) for row in rows))

    @classmethod
    def from_json(cls, text: str, convention: str = "half") -> "SymForm":
        try:
            rows = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormError(f"bad Gram matrix {text!r}; expected JSON rows such as "
                            "'[[1,0],[0,3]]'") from exc
        if not isinstance(rows, list) or not all(isinstance(r, list) for r in rows):
            raise FormError("Gram matrix must be a JSON list of rows")
        return cls.from_rows(rows, convention)

    @classmethod
    def diagonal(cls, entries: Iterable) -> "SymForm":
        d = [as_fraction(e) for e in entries]
        n = len(d)
        return cls(tuple(tuple(d[i] if i == j else Fraction(0) for j in range(n))
                         for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.gram)

    def det(self) -> Fraction:
        return _det([list(r) for r in self.gram])

    def is_integral(self, p: int) -> bool:
        return all(x.denominator % p for row in self.gram for x in row)

    def value(self, x: Sequence) -> Fraction:
        return sum((x[i] * self.gram[i][j] * x[j] for i in range(self.n) for j in range(self.n)),
                   Fraction(0))

    def conjugate(self, U: Sequence[Sequence]) -> "SymForm":
        """U S U^t."""
        n = self.n
        G = self.gram
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                row.append(sum((Fraction(U[i][k]) * G[k][l] * U[j][l]
                                for k in range(n) for l in range(n)), Fraction(0)))
            rows.append(tuple(row))
        return SymForm(tuple(rows))

    def rows_as_strings(self) -> list[list[str]]:
        return [[fmt_rational(x) for x in row] for row in self.gram]


def _det(M: list[list[Fraction]]) -> Fraction:
    M = [list(map(Fraction, r)) for r in M]
    n = len(M)
    det = Fraction(1)
    for c in range(n):
        piv = next((r for r in range(c, n) if M[r][c] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            det = -det
        det *= M[c][c]
        for r in range(c + 1, n):
            f = M[r][c] / M[c][c]
            if f:
                for k in range(c, n):
                    M[r][k] -= f * M[c][k]
    return det


@dataclass(frozen=True)
class DiagonalForm:
    """diag(eps_1 p^a_1, ..., eps_n p^a_n) with eps_i in {1, Delta}.

    Construct through :meth:`make`, which sorts by exponent and puts each
    Jordan block in the shape (1, ..., 1, det class); two diagonal forms are
    GL_n(Z_p)-equivalent exactly when their canonical forms coincide.
    """

    ctx: PrimeContext
    exponents: tuple[int, ...]
    units: tuple[int, ...]

    @classmethod
    def make(cls, ctx: PrimeContext, exponents: Sequence[int],
             units: Sequence | None = None) -> "DiagonalForm":
        units = [1] * len(exponents) if units is None else list(units)
        if len(units) != len(exponents):
            raise FormError("exponent and unit lists differ in length")
        blocks: dict[int, int] = {}
        sizes: dict[int, int] = {}
        for a, u in zip(exponents, units):
            blocks[a] = blocks.get(a, 1) * chi(u, ctx.p)
            sizes[a] = sizes.get(a, 0) + 1
        exps, us = [], []
        for a in sorted(blocks):
            k = sizes[a]
            exps += [a] * k
            us += [1] * (k - 1) + [1 if blocks[a] == 1 else ctx.delta]
        return cls(ctx, tuple(exps), tuple(us))

    @classmethod
    def from_entries(cls, ctx: PrimeContext, entries: Iterable) -> "DiagonalForm":
        exps, units = [], []
        for e in entries:
            e = as_fraction(e)
            if e == 0:
                raise FormError("diagonal entries must be nonzero")
            exps.append(ordp(e, ctx.p))
            units.append(unit_part(e, ctx.p))
        return cls.make(ctx, exps, units)

    @property
    def p(self) -> int:
        return self.ctx.p

    @property
    def n(self) -> int:
        return len(self.exponents)

    def entries(self) -> list[Fraction]:
        return [Fraction(u) * Fraction(self.p) ** a for a, u in zip(self.exponents, self.units)]

    def chis(self) -> tuple[int, ...]:
        return tuple(chi(u, self.p) for u in self.units)

    def symform(self) -> SymForm:
        return SymForm.diagonal(self.entries())

    def scaled(self, k: int) -> "DiagonalForm":
        """p^k times the form."""
        return DiagonalForm.make(self.ctx, [a + k for a in self.exponents], self.units)

    def det_exponent(self) -> int:
        return sum(self.exponents)

    def det_unit_class(self) -> int:
        c = 1
        for x in self.chis():
            c *= x
        return c

    def is_integral(self) -> bool:
        return all(a >= 0 for a in self.exponents)

    def label(self) -> str:
        parts = []
        for a, u in zip(self.exponents, self.units):
            us = "1" if u == 1 else "D"
            parts.append(us if a == 0 else (f"{us}*p" if a == 1 else f"{us}*p^{a}"))
        return ",".join(parts)

    def to_json(self) -> dict:
        return {"exponents": list(self.exponents),
                "units": ["1" if u == 1 else "D" for u in self.units]}

    def __str__(self):
        return f"diag({self.label()})"


_ENTRY = re.compile(r"^\s*(?:([+-]?[0-9/]+|[+-]?D|[+-])\s*\*?\s*)?(?:p(?:\^\s*(\d+))?)?\s*$")


def parse_entry(s: str, ctx: PrimeContext) -> Fraction:
    """Parse one diagonal entry such as '1', 'D', 'p', '-1*p', 'D*p^2', '9/2'."""
    s = s.strip()
    if not s:
        raise FormError("empty form entry")
    m = _ENTRY.match(s)
    if not m or (m.group(1) is None and "p" not in s):
        raise FormError(f"bad form entry {s!r}; expected e*p^a with e in {{1, D, integer}}")
    coef, exp = m.group(1), m.group(2)
    if coef in (None, "", "+"):
        c = Fraction(1)
    elif coef == "-":
        c = Fraction(-1)
    elif coef.lstrip("+-") == "D":
        c = Fraction(-ctx.delta if coef.startswith("-") else ctx.delta)
    else:
        c = parse_rational(coef)
    if "p" in s:
        c *= Fraction(ctx.p) ** (int(exp) if exp else 1)
    if c == 0:
        raise FormError("form entries must be nonzero")
    return c


def parse_form(text: str, ctx: PrimeContext) -> DiagonalForm:
    """Parse 'e1*p^a1,e2*p^a2,...' into a canonical diagonal form."""
    return DiagonalForm.from_entries(ctx, [parse_entry(x, ctx) for x in text.split(",")])


# ---------------------------------------------------------------------------
# Diagonalization


def rational_diagonalize(T: SymForm) -> list[Fraction]:
    """Orthogonal basis over Q; returns the diagonal values Q(e_i')."""
    G = [list(r) for r in T.gram]
    n = len(G)
    out = []
    for k in range(n):
        piv = next((i for i in range(k, n) if G[i][i] != 0), None)
        if piv is None:
            j = next(((i, l) for i in range(k, n) for l in range(i + 1, n) if G[i][l] != 0), None)
            if j is None:
                raise FormError("singular form")
            i, l = j
            _add_row_col(G, i, l, 1)
            piv = i
        _swap(G, k, piv)
        d = G[k][k]
        for i in range(k + 1, n):
            f = G[i][k] / d
            if f:
                _add_row_col(G, i, k, -f)
        out.append(d)
    return out


def _swap(G, i, j):
    if i == j:
        return
    G[i], G[j] = G[j], G[i]
    for row in G:
        row[i], row[j] = row[j], row[i]


def _add_row_col(G, i, j, f):
    """Basis change e_i <- e_i + f e_j."""
    n = len(G)
    for k in range(n):
        G[i][k] += f * G[j][k]
    for k in range(n):
        G[k][i] += f * G[k][j]


def diagonalize(T: SymForm, ctx: PrimeContext) -> DiagonalForm:
    """Jordan splitting over Z_p (p odd) by minimal-valuation pivoting."""
    p = ctx.p
    if not T.is_integral(p):
        raise NotIntegral(f"form is not {p}-integral, so the cycle is empty")
    G = [list(r) for r in T.gram]
    n = len(G)
    diag = []
    for k in range(n):
        best = min(ordp(G[i][j], p) for i in range(k, n) for j in range(i, n))
        if best == INF:
            raise FormError("singular form")
        i = next((i for i in range(k, n) if ordp(G[i][i], p) == best), None)
        if i is None:
            # all minimal entries are off-diagonal: replace e_i by e_i + e_j
            i, j = next((i, j) for i in range(k, n) for j in range(i + 1, n)
                        if ordp(G[i][j], p) == best)
            _add_row_col(G, i, j, 1)
        _swap(G, k, i)
        d = G[k][k]
        for r in range(k + 1, n):
            f = G[r][k] / d
            if f:
                _add_row_col(G, r, k, -f)
        diag.append(d)
    return DiagonalForm.from_entries(ctx, diag)


# ---------------------------------------------------------------------------
# Local invariants and representability


@dataclass(frozen=True)
class LocalInvariants:
    rank: int
    det_exponent: int
    det_unit_class: int  # chi of the unit part of det
    hasse: int


def hasse_of_entries(d: Sequence, place) -> int:
    h = 1
    for i in range(len(d)):
        for j in range(i + 1, len(d)):
            h *= hilbert_symbol(d[i], d[j], place)
    return h


def local_invariants(D: DiagonalForm) -> LocalInvariants:
    return LocalInvariants(D.n, D.det_exponent(), D.det_unit_class(),
                           hasse_of_entries(D.entries(), D.p))


def _prod(xs) -> Fraction:
    out = Fraction(1)
    for x in xs:
        out *= x
    return out


def _same_square_class(a: Fraction, b: Fraction, place) -> bool:
    q = a / b
    if place == REAL:
        return q > 0
    # q is a square at an odd prime iff even valuation and square unit;
    # at 2 the unit must be 1 mod 8.
    v = ordp(q, place)
    if v % 2:
        return False
    u = unit_part(q, place)
    if place == 2:
        return u.numerator * u.denominator % 8 == 1
    return chi(u, place) == 1


def represents_in(T: Sequence, V: Sequence, place) -> bool:
    """Does the diagonal space <V> over Q_v represent the diagonal <T>?

    Both arguments are lists of nonzero rational diagonal entries.
    """
    T = [as_fraction(x) for x in T]
    V = [as_fraction(x) for x in V]
    n, m = len(T), len(V)
    if n > m:
        return False
    if place == REAL:
        pos = lambda xs: sum(1 for x in xs if x > 0)
        return pos(T) <= pos(V) and n - pos(T) <= m - pos(V)
    k = m - n
    if k >= 3:
        return True
    dT, dV = _prod(T), _prod(V)
    hT, hV = hasse_of_entries(T, place), hasse_of_entries(V, place)
    if k == 0:
        return _same_square_class(dT, dV, place) and hT == hV
    if k == 1:
        d = dV / dT
        return hV == hT * hilbert_symbol(dT, d, place)
    # k == 2: complement is binary of det d; its Hasse invariant is free
    # unless it is the hyperbolic plane
    d = dV / dT
    if _same_square_class(d, Fraction(-1), place):
        return hV == hT * hilbert_symbol(dT, d, place)
    return True


def space_entries(ctx: PrimeContext, space: str) -> list[Fraction]:
    """Diagonal model of the rank-4 spaces V_p and V'_p."""
    if space == "V":
        return [Fraction(1), Fraction(-1), Fraction(1), Fraction(-ctx.delta)]
    if space == "V'":
        return [Fraction(1), Fraction(-1), Fraction(ctx.p), Fraction(-ctx.p * ctx.delta)]
    raise FormError(f"unknown space {space!r}; expected 'V' or \"V'\"")


def twisted_space_criterion(D: DiagonalForm) -> bool:
    """Explicit sign criterion for representation of a ternary by V'_p."""
    if D.n != 3:
        raise FormError("representability criterion needs rank 3")
    a1, a2, a3 = D.exponents
    c1, c2, c3 = D.chis()
    cm = chi(-1, D.p)
    s = a1 + a2 + a3
    rhs = ((-1) ** s * cm ** (s + a1 * a2 + a2 * a3 + a3 * a1)
           * c1 ** (a2 + a3) * c2 ** (a1 + a3) * c3 ** (a1 + a2))
    return rhs == -1


def represents_locally(D: DiagonalForm, space: str = "V") -> bool:
    """Is the ternary D represented by V_p (space 'V') or V'_p (space "V'")?

    Evaluated by the explicit sign criterion and cross-checked against the
    Hasse-invariant test; a disagreement raises.
    """
    if D.n != 3:
        raise FormError("represents_locally needs a rank-3 form")
    by_twisted = twisted_space_criterion(D)
    by_hasse = represents_in(D.entries(), space_entries(D.ctx, "V'"), D.p)
    if by_twisted != by_hasse:
        raise AssertionError(f"representability criteria disagree on {D}")
    if space == "V'":
        return by_twisted
    if space == "V":
        return not by_twisted
    raise FormError(f"unknown space {space!r}")


def quaternion_invariant(a1, a2, a3) -> set:
    """Places where the quaternion algebra (-a1 a2, -a2 a3) ramifies."""
    a1, a2, a3 = (as_fraction(x) for x in (a1, a2, a3))
    if 0 in (a1, a2, a3):
        raise FormError("entries must be nonzero")
    x, y = -a1 * a2, -a2 * a3
    places = sorted(prime_support(x, y) | {2}) + [REAL]
    return {v for v in places if hilbert_symbol(x, y, v) == -1}
