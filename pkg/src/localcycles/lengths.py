"""Local lengths e_p(T) at isolated points, the ordinary-locus length and the
transversality test."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .qform import DiagonalForm, FormError, fmt_rational


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class LengthResult:
    value: Fraction
    case: str  # "even" or "odd": parity of a2
    form: DiagonalForm
    in_domain: bool

    def to_json(self) -> dict:
        return {"T": self.form.label(), "e_p": fmt_rational(self.value),
                "case": self.case, "in_domain": self.in_domain}


def e_p(T: DiagonalForm) -> LengthResult:
    """Length of the local ring at an isolated point, from the exponents of T.

    Units are ignored.  The value is flagged out of domain when it is not
    an integer (a2 even with a3 even) or when a1 != 0.
    """
    if T.n != 3:
        raise FormError("e_p needs a rank-3 form")
    a1, a2, a3 = T.exponents
    p = T.p
    if a2 % 2 == 0:
        val = sum(Fraction((a2 + a3 - 4 * i) * p**i) for i in range(a2 // 2))
        val += Fraction(a3 - a2 + 1, 2) * p ** (a2 // 2)
        case = "even"
    else:
        val = sum(Fraction((a2 + a3 - 4 * i) * p**i) for i in range((a2 - 1) // 2 + 1))
        case = "odd"
    return LengthResult(val, case, T, val.denominator == 1 and a1 == 0)


def e_p_split(T: DiagonalForm) -> LengthResult:
    """Same formula, named for call sites at split primes."""
    return e_p(T)


def ordinary_length(T: DiagonalForm) -> int:
    """p^{ord det T} for a rank-2 T whose diagonal exponents are all even."""
    if T.n != 2:
        raise FormError("ordinary length needs a rank-2 form")
    if any(a % 2 for a in T.exponents):
        raise DomainError("on the ordinary locus every diagonal exponent of T is even")
    if any(a < 0 for a in T.exponents):
        raise DomainError("T must be p-integral")
    return T.p ** sum(T.exponents)


def transversality(T: DiagonalForm) -> bool:
    """The cycles meet transversally exactly when ord_p det T = 1."""
    if T.n != 3:
        raise FormError("transversality needs a rank-3 form")
    return T.det_exponent() == 1
