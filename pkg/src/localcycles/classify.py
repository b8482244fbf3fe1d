"""Predicates on fundamental matrices: what the special cycle looks like over
the supersingular locus, irreducibility of its components, and the set of
places where a ternary fails to be represented."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .padic import REAL, PrimeContext, chi, ordp, prime_support
from .qform import (
    DiagonalForm,
    FormError,
    SymForm,
    diagonalize,
    rational_diagonalize,
    represents_in,
)

LOCI = ("empty", "isolated-superspecial", "contains-components", "ordinary-possible")
CASES = ("inert", "split")


@dataclass(frozen=True)
class CycleClassification:
    locus: str
    reasons: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.locus not in LOCI:
            raise ValueError(f"unknown locus {self.locus!r}")

    def to_json(self) -> dict:
        return {"locus": self.locus, "reasons": list(self.reasons)}


def _check_case(case: str) -> None:
    if case not in CASES:
        raise ValueError(f"case must be one of {CASES}, got {case!r}")


def ordinary_possible(D: DiagonalForm) -> bool:
    """Necessary condition for ordinary points: D is represented by the norm
    form of the unramified quadratic ring, so n <= 2, every exponent is
    even and a rank-2 D is anisotropic."""
    if D.n > 2 or any(a % 2 for a in D.exponents):
        return False
    if D.n == 2:
        c1, c2 = D.chis()
        return chi(-1, D.p) * c1 * c2 == -1
    return True


def classify_cycle(T: SymForm, ctx: PrimeContext, case: str = "inert") -> CycleClassification:
    """Shape of the cycle attached to a nonsingular T of rank at most 4."""
    _check_case(case)
    if T.n > 4:
        raise FormError("fundamental matrices have rank at most 4")
    if T.det() == 0:
        raise FormError("T is singular; the classification needs det T != 0")
    p = ctx.p
    if not T.is_integral(p):
        return CycleClassification("empty", [f"T is not {p}-integral"])
    D = diagonalize(T, ctx)
    if case == "split":
        return CycleClassification(
            "isolated-superspecial",
            ["split prime: the supersingular locus is a finite set of points"])
    units = [i for i, a in enumerate(D.exponents) if a == 0]
    rank = len(units)
    reasons = [f"T mod p has rank {rank}"]
    if rank == 0:
        return CycleClassification(
            "contains-components",
            reasons + ["T = 0 mod p: the supersingular part is a union of projective lines"])
    ss_empty = False
    if rank > 2:
        ss_empty = True
        reasons.append("rank of T mod p exceeds 2: no supersingular points")
    elif rank == 2:
        c = D.chis()
        if chi(-1, p) * c[units[0]] * c[units[1]] == -1:
            ss_empty = True
            reasons.append("T mod p is anisotropic modulo its radical: no supersingular points")
    ordinary = ordinary_possible(D)
    if ordinary:
        reasons.append("T is represented by the norm form, so ordinary points may occur")
        return CycleClassification("ordinary-possible", reasons)
    if ss_empty:
        return CycleClassification("empty", reasons)
    reasons.append("T != 0 mod p: only isolated superspecial points")
    return CycleClassification("isolated-superspecial", reasons)


def hz_irreducible(T: DiagonalForm) -> bool:
    """Is every connected component of the cycle of T an irreducible curve?

    True exactly for T ~ diag(p, e2 p, e3 p^a3) with a3 odd, and a3 = 1
    when -e2 is a non-square.  With a general leading unit e1 the relevant
    class is -e1 e2, the determinant class of the first block.
    """
    if T.n != 3:
        raise FormError("irreducibility criterion needs rank 3")
    a1, a2, a3 = T.exponents
    if a1 < 1:
        raise FormError("irreducibility criterion needs T = 0 mod p")
    if not (a1 == 1 and a2 == 1 and a3 % 2 == 1):
        return False
    e1, e2, _ = T.chis()
    return a3 == 1 or chi(-1, T.p) * e1 * e2 == 1


def siegel_irreducible(T: DiagonalForm) -> bool:
    """Irreducibility predicate for rank-4 fundamental matrices."""
    if T.n != 4:
        raise FormError("Siegel irreducibility criterion needs rank 4")
    a = T.exponents
    e = T.chis()
    cm = chi(-1, T.p)
    if a[0] % 2 == 0:
        if a[0] != 0 or e[0] != -1:
            return False
        if any(x % 2 == 0 for x in a[1:]):
            return False
        if cm * e[1] * e[2] == 1:
            return a[2] == 1
        return a[3] == 1
    if a[0] != 1:
        return False
    if cm * e[0] * e[1] == 1:
        return a[1] == 1
    return a[2] == 1


# ---------------------------------------------------------------------------
# Diff(T)


def global_space(ctx: PrimeContext) -> list[Fraction]:
    """Diagonal rational model of the rank-4 space V, equal to V_p at p."""
    return [Fraction(1), Fraction(-1), Fraction(1), Fraction(-ctx.delta)]


def check_places(T: SymForm, ctx: PrimeContext, V: Sequence | None = None) -> list:
    """Places where local representability can fail."""
    V = global_space(ctx) if V is None else [Fraction(v) for v in V]
    d = rational_diagonalize(T)
    finite = prime_support(*d, *V) | {2, ctx.p}
    return sorted(finite) + [REAL]


def diff_set(T: SymForm, ctx: PrimeContext, V: Sequence | None = None) -> set:
    """Places where T is not represented by the incoherent collection.

    At finite places the collection is V tensored with Q_l; at the real
    place it is positive definite of rank 4.
    """
    if T.det() == 0:
        raise FormError("T is singular")
    V = global_space(ctx) if V is None else [Fraction(v) for v in V]
    d = rational_diagonalize(T)
    out = set()
    for v in check_places(T, ctx, V):
        if v == REAL:
            if any(x < 0 for x in d):
                out.add(REAL)
        elif not represents_in(d, V, v):
            out.add(v)
    return out


def divisible_by_p(T: SymForm, p: int) -> bool:
    """T = 0 mod p, i.e. every entry of the half-Gram matrix lies in pZ_(p)."""
    return all(ordp(x, p) >= 1 for row in T.gram for x in row)


def is_regular(T: SymForm, N: int, ctx: PrimeContext, case: str = "inert",
               V: Sequence | None = None) -> bool:
    """Diff(T) = {p}, p does not divide the level N, and p does not divide
    T when p is inert."""
    _check_case(case)
    p = ctx.p
    if diff_set(T, ctx, V) != {p}:
        return False
    if N % p == 0:
        return False
    if case == "inert" and divisible_by_p(T, p):
        return False
    return True
