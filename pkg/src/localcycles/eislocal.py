"""Local Whittaker values and derivatives at the prime p, and the local
degree factor e_p(T) * log p of a regular T.

Values are exact rationals times an opaque Weil-index token, either
``gV`` or ``gV'``, with ``gV / gV' = -1``.  The factor log p is never
evaluated; ``logp`` records its power (0 for values, 1 for derivatives).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .classify import CycleClassification, classify_cycle, diff_set, is_regular
from .density import assembled_A, derivative_at_one, named_form, reduce
from .lengths import e_p
from .padic import PrimeContext
from .qform import DiagonalForm, FormError, SymForm, diagonalize, fmt_rational, represents_in

TOKENS = ("gV", "gV'")


class UnsupportedCase(ValueError):
    """The closed value is only asserted under hypotheses that fail here."""


class NotRegular(ValueError):
    pass


@dataclass(frozen=True)
class WhittakerValue:
    magnitude: Fraction
    gamma: str
    logp: int = 0

    def __post_init__(self):
        if self.gamma not in TOKENS:
            raise ValueError(f"gamma token must be one of {TOKENS}")
        if self.logp not in (0, 1):
            raise ValueError("logp power is 0 or 1")

    def in_terms_of(self, token: str) -> "WhittakerValue":
        """Rewrite with the other token using gV = -gV'."""
        if token == self.gamma:
            return self
        if token not in TOKENS:
            raise ValueError(f"gamma token must be one of {TOKENS}")
        return WhittakerValue(-self.magnitude, token, self.logp)

    def to_json(self) -> dict:
        return {"magnitude": fmt_rational(self.magnitude), "gamma": self.gamma,
                "logp": self.logp}


@dataclass(frozen=True)
class DegreeFactor:
    e_p: int
    prime: int
    logp: int
    regular: bool
    classification: CycleClassification | None = None

    def to_json(self) -> dict:
        out = {"e_p": self.e_p, "prime": self.prime, "logp": self.logp,
               "regular": self.regular}
        if self.classification is not None:
            out["classification"] = self.classification.to_json()
        return out


def _check(T: DiagonalForm, case: str) -> None:
    if T.n != 3:
        raise FormError("Whittaker values are for rank-3 forms")
    if case not in ("inert", "split"):
        raise ValueError(f"case must be 'inert' or 'split', got {case!r}")


def twisted_space(ctx: PrimeContext, case: str) -> list[Fraction]:
    """Diagonal model of V'_p: the form S' for an inert p, the norm form of
    the ramified quaternion algebra for a split p."""
    return named_form(ctx, "S'" if case == "inert" else "S'split").entries()


def represented_by_twisted(T: DiagonalForm, case: str) -> bool:
    return represents_in(T.entries(), twisted_space(T.ctx, case), T.p)


def _hypotheses(T: DiagonalForm, case: str) -> None:
    if not represented_by_twisted(T, case):
        raise UnsupportedCase(f"{T} is not represented by V'_p ({case} case)")
    if case == "inert" and T.exponents[0] >= 1:
        raise UnsupportedCase(f"{T} = 0 mod p; the inert closed forms need T != 0 mod p")


def whittaker_value(T: DiagonalForm, case: str = "inert") -> WhittakerValue:
    """W_{T,p}(e, 0, Phi'_p) from its closed form."""
    _check(T, case)
    if not T.is_integral():
        return WhittakerValue(Fraction(0), "gV'")
    _hypotheses(T, case)
    p = Fraction(T.p)
    if case == "inert":
        mag = 2 * p**-4 * (p * p - 1)
    else:
        mag = 2 * p**-4 * (p + 1) ** 2
    return WhittakerValue(mag, "gV'")


def whittaker_value_from_density(T: DiagonalForm, case: str = "inert") -> WhittakerValue:
    """|det S'|^{3/2} alpha_p(S', T) with |det S'| = p^-2, via reduction."""
    _check(T, case)
    if not T.is_integral():
        return WhittakerValue(Fraction(0), "gV'")
    S = named_form(T.ctx, "S'" if case == "inert" else "S'split")
    return WhittakerValue(Fraction(1, T.p**3) * reduce(S, T).value(), "gV'")


def _length(T: DiagonalForm) -> int:
    L = e_p(T)
    if not L.in_domain:
        raise UnsupportedCase(f"e_p({T}) = {L.value} lies outside the length formula's domain")
    return int(L.value)


def whittaker_derivative(T: DiagonalForm, case: str = "inert") -> WhittakerValue:
    """W'_{T,p}(e, 0, Phi_p) from its closed form in e_p(T)."""
    _check(T, case)
    if not T.is_integral():
        return WhittakerValue(Fraction(0), "gV", 1)
    _hypotheses(T, case)
    p2 = Fraction(1, T.p**2)
    if case == "inert":
        factor = (1 + p2) * (1 - p2)
    else:
        factor = (1 - p2) ** 2
    return WhittakerValue(factor * _length(T), "gV", 1)


def whittaker_derivative_from_density(T: DiagonalForm, case: str = "inert") -> WhittakerValue:
    """-log p * gV * dA_{S,T}/dX at X = 1, with S of V_p (H4 when p splits)."""
    _check(T, case)
    if T.exponents[0] != 0:
        raise UnsupportedCase("the density path needs a unimodular first entry")
    A = assembled_A(T, "S" if case == "inert" else "H4")
    return WhittakerValue(-derivative_at_one(A), "gV", 1)


def degree_factor(T: SymForm, N: int, ctx: PrimeContext, case: str = "inert") -> DegreeFactor:
    """e_p(T) and the log p marker for a regular T."""
    if not is_regular(T, N, ctx, case):
        raise NotRegular(f"T is not regular at {ctx.p} (Diff = {sorted(map(str, diff_set(T, ctx)))}, "
                         f"level {N})")
    D = diagonalize(T, ctx)
    return DegreeFactor(_length(D), ctx.p, 1, True, classify_cycle(T, ctx, case))
