"""Local representation densities alpha_p(S, T).

Three routes are provided and are meant to be played against each other:

* ``density_bruteforce`` counts solutions of S[x] = T modulo p^t;
* closed-form polynomials A_{S,T}(X) for the named rank-4 forms;
* ``reduce`` splits unimodular pieces off T and rescales, producing an exact
  product of unary densities (with a brute-force residual when the
  remaining piece cannot be split further).

Densities use the half-Gram convention: x in M_{m,n}(Z_p) represents T
when x^t S x = T, and

    alpha_p(S, T) = lim_t p^{t(n(n+1)/2 - mn)} #{x mod p^t : x^t S x = T mod p^t}.

With this normalization alpha_p(<1>, <1>) = 2.
"""

from __future__ import annotations

import os
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from .padic import PrimeContext, chi, mod_pt, ordp
from .qform import DiagonalForm, FormError, SymForm, diagonalize

DEFAULT_BUDGET = 6 * 10**9
BUDGET_ENV = "LOCALCYCLES_BUDGET"


class BudgetExceeded(RuntimeError):
    """The requested brute-force count is larger than the configured budget."""


class NotReducible(ValueError):
    """No unimodular block can be split off and no rescaling applies."""


def budget() -> int:
    return int(os.environ.get(BUDGET_ENV, DEFAULT_BUDGET))


# ---------------------------------------------------------------------------
# Polynomials in X


@dataclass(frozen=True)
class DensityPolynomial:
    """Polynomial in X with exact rational coefficients (constant term first)."""

    coeffs: tuple[Fraction, ...]
    provenance: str = ""

    def __post_init__(self):
        c = list(self.coeffs)
        while len(c) > 1 and c[-1] == 0:
            c.pop()
        object.__setattr__(self, "coeffs", tuple(Fraction(x) for x in (c or [0])))

    @classmethod
    def of(cls, *coeffs, provenance: str = "") -> "DensityPolynomial":
        return cls(tuple(Fraction(c) for c in coeffs), provenance)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, x) -> Fraction:
        x = Fraction(x)
        out = Fraction(0)
        for c in reversed(self.coeffs):
            out = out * x + c
        return out

    def derivative(self) -> "DensityPolynomial":
        return DensityPolynomial(tuple(i * c for i, c in enumerate(self.coeffs))[1:] or (Fraction(0),),
                                 f"d/dX {self.provenance}")

    def __add__(self, other: "DensityPolynomial") -> "DensityPolynomial":
        n = max(len(self.coeffs), len(other.coeffs))
        a = self.coeffs + (Fraction(0),) * (n - len(self.coeffs))
        b = other.coeffs + (Fraction(0),) * (n - len(other.coeffs))
        return DensityPolynomial(tuple(x + y for x, y in zip(a, b)), self.provenance)

    def __mul__(self, other) -> "DensityPolynomial":
        if not isinstance(other, DensityPolynomial):
            return DensityPolynomial(tuple(c * Fraction(other) for c in self.coeffs), self.provenance)
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            for j, b in enumerate(other.coeffs):
                out[i + j] += a * b
        return DensityPolynomial(tuple(out), self.provenance)

    __rmul__ = __mul__

    def divmod(self, other: "DensityPolynomial") -> tuple["DensityPolynomial", "DensityPolynomial"]:
        num = list(self.coeffs)
        den = list(other.coeffs)
        if den == [0]:
            raise ZeroDivisionError("division by the zero polynomial")
        q = [Fraction(0)] * max(len(num) - len(den) + 1, 1)
        for k in range(len(num) - len(den), -1, -1):
            f = num[k + len(den) - 1] / den[-1]
            q[k] = f
            for i, d in enumerate(den):
                num[k + i] -= f * d
        return DensityPolynomial(tuple(q)), DensityPolynomial(tuple(num[: len(den) - 1] or [0]))

    def exact_div(self, other: "DensityPolynomial") -> "DensityPolynomial":
        q, r = self.divmod(other)
        if any(r.coeffs):
            raise ArithmeticError("polynomial division is not exact")
        return q

    def __eq__(self, other) -> bool:
        if not isinstance(other, DensityPolynomial):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def with_provenance(self, tag: str) -> "DensityPolynomial":
        return DensityPolynomial(self.coeffs, tag)

    def to_json(self) -> dict:
        return {"coeffs": [f"{c.numerator}/{c.denominator}" for c in self.coeffs],
                "provenance": self.provenance}

    def __str__(self):
        terms = []
        for i, c in enumerate(self.coeffs):
            if c:
                terms.append(f"{c}" + ("" if i == 0 else ("*X" if i == 1 else f"*X^{i}")))
        return " + ".join(terms) or "0"


def derivative_at_one(A: DensityPolynomial) -> Fraction:
    return A.derivative()(1)


X = DensityPolynomial.of(0, 1)
ONE = DensityPolynomial.of(1)


# ---------------------------------------------------------------------------
# Brute-force counting oracle


@dataclass(frozen=True)
class CountResult:
    count: int
    scale_exponent: int
    density: Fraction
    t: int
    stabilized: bool
    next_density: Fraction | None = None

    def to_json(self) -> dict:
        d = self.density
        return {"count": str(self.count), "scale_exponent": self.scale_exponent,
                "density": f"{d.numerator}/{d.denominator}", "t": self.t,
                "stabilized": self.stabilized}


def _sym_index(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(i, n)]


class _Counter:
    """Distributions of sum_k s_k r_k r_k^t over Sym_n(Z/p^t), cached by prefix.

    A state is the flattened tuple of upper-triangular entries mod q = p^t.
    Adding one row of x is a convolution with the distribution of s r r^t,
    done as a weighted sum of cyclic shifts of the whole array.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._rows: dict = {}
        self._partial: dict = {}

    def row_distribution(self, p: int, t: int, n: int, s: int):
        key = (p, t, n, s)
        with self._lock:
            hit = self._rows.get(key)
        if hit is not None:
            return hit
        q = p**t
        N = n * (n + 1) // 2
        grid = np.indices((q,) * n).reshape(n, -1).astype(np.int64)
        idx = np.zeros(grid.shape[1], dtype=np.int64)
        for i, j in _sym_index(n):
            idx = idx * q + (s * grid[i] * grid[j]) % q
        counts = np.bincount(idx, minlength=q**N)
        support = np.nonzero(counts)[0]
        shifts = np.stack(np.unravel_index(support, (q,) * N), axis=1)
        out = (counts.reshape((q,) * N), shifts, counts[support])
        with self._lock:
            self._rows[key] = out
        return out

    def partial(self, p: int, t: int, n: int, svals: tuple[int, ...]):
        key = (p, t, n, svals)
        with self._lock:
            hit = self._partial.get(key)
        if hit is not None:
            return hit
        if len(svals) == 1:
            dist = self.row_distribution(p, t, n, svals[0])[0]
        else:
            prev = self.partial(p, t, n, svals[:-1])
            _, shifts, weights = self.row_distribution(p, t, n, svals[-1])
            N = n * (n + 1) // 2
            axes = tuple(range(N))
            dist = np.zeros_like(prev)
            for sh, w in zip(shifts, weights):
                dist += int(w) * np.roll(prev, tuple(int(x) for x in sh), axis=axes)
        with self._lock:
            self._partial[key] = dist
        return dist

    def count(self, p: int, t: int, svals: tuple[int, ...], target: tuple[int, ...], n: int) -> int:
        q = p**t
        N = n * (n + 1) // 2
        m = len(svals)
        states = q**N
        # q^n bounds the support of a row distribution; check before allocating
        cost = states * q**n * max(m - 2, 0) + q**n * m
        if cost > budget() or states > 2 * 10**8:
            raise BudgetExceeded(
                f"brute force with p={p}, t={t}, n={n}, m={m} needs ~{cost:.3g} "
                f"operations; budget is {budget():.3g} (set {BUDGET_ENV} to raise it)")
        if m * n * t * np.log2(p) >= 62:
            raise BudgetExceeded("solution counts would overflow 64-bit integers")
        _, shifts, weights = self.row_distribution(p, t, n, svals[-1])
        if m == 1:
            dist = self.row_distribution(p, t, n, svals[0])[0]
            return int(dist[target])
        prev = self.partial(p, t, n, svals[:-1])
        # last row: gather prev[T - v] over the support of the last distribution
        tgt = np.asarray(target, dtype=np.int64)
        diff = (tgt[None, :] - shifts) % q
        vals = prev[tuple(diff.T)]
        return int(np.dot(vals.astype(object), weights.astype(object)))

    def clear(self):
        with self._lock:
            self._rows.clear()
            self._partial.clear()


_COUNTER = _Counter()


def _as_diagonal(S, ctx: PrimeContext) -> DiagonalForm:
    if isinstance(S, DiagonalForm):
        return S
    if isinstance(S, SymForm):
        return diagonalize(S, ctx)
    return DiagonalForm.from_entries(ctx, S)


def _as_symform(T) -> SymForm:
    if isinstance(T, SymForm):
        return T
    if isinstance(T, DiagonalForm):
        return T.symform()
    return SymForm.diagonal(T)


def _raw_count(Sd: DiagonalForm, T: SymForm, t: int) -> int:
    p = Sd.p
    q = p**t
    svals = tuple(mod_pt(e, p, t) for e in Sd.entries())
    n = T.n
    target = tuple(mod_pt(T.gram[i][j], p, t) for i, j in _sym_index(n))
    # rows with s = 0 mod q contribute q^n free choices each
    nz = tuple(s for s in svals if s)
    free = len(svals) - len(nz)
    if not nz:
        return q ** (n * free) if not any(target) else 0
    return _COUNTER.count(p, t, nz, target, n) * q ** (n * free)


def density_bruteforce(S, T, t: int, ctx: PrimeContext | None = None,
                       check_next: bool = True) -> CountResult:
    """Count x mod p^t with x^t S x = T mod p^t and scale to a density.

    ``S`` may be a DiagonalForm, a SymForm (diagonalized first; the count is
    invariant under GL_m(Z_p)) or a list of diagonal entries.  When
    ``check_next`` is set and the budget allows, the count is repeated at
    t + 1 and ``stabilized`` records whether the two approximants agree.
    """
    if ctx is None:
        if isinstance(S, DiagonalForm):
            ctx = S.ctx
        else:
            raise ValueError("a PrimeContext is needed for non-diagonal input")
    Sd = _as_diagonal(S, ctx)
    Ts = _as_symform(T)
    if not Sd.is_integral() or not Ts.is_integral(ctx.p):
        raise FormError("brute force needs p-integral S and T")
    m, n = Sd.n, Ts.n
    if n > m:
        raise FormError("rank of T exceeds rank of S")
    if t < 1:
        raise ValueError("precision t must be positive")
    N = n * (n + 1) // 2
    k = t * (N - m * n)
    cnt = _raw_count(Sd, Ts, t)
    dens = Fraction(cnt) * Fraction(ctx.p) ** k
    nxt = None
    if check_next:
        try:
            c2 = _raw_count(Sd, Ts, t + 1)
            nxt = Fraction(c2) * Fraction(ctx.p) ** ((t + 1) * (N - m * n))
        except BudgetExceeded:
            nxt = None
    return CountResult(cnt, k, dens, t, nxt is not None and nxt == dens, nxt)


def clear_cache():
    _COUNTER.clear()
    _POLY_CACHE.clear()


# ---------------------------------------------------------------------------
# Unary densities and the reduction pipeline


def _fp_count(dim: int, det_chi: int, c: int, p: int) -> int:
    """#{u in F_p^dim, u != 0 : U[u] = c} for a nondegenerate U with chi(det) = det_chi."""
    if dim == 0:
        return 0
    cm1 = chi(-1, p)
    if dim % 2 == 0:
        k = dim // 2
        nu = det_chi * cm1**k
        if c % p == 0:
            total = p ** (dim - 1) + nu * (p**k - p ** (k - 1))
            return total - 1
        return p ** (dim - 1) - nu * p ** (k - 1)
    k = (dim - 1) // 2
    if c % p == 0:
        return p ** (dim - 1) - 1
    return p ** (dim - 1) + chi(cm1**k * c, p) * det_chi * p**k


@dataclass(frozen=True)
class Jordan:
    """Jordan data of a diagonal form: exponent -> (rank, chi of det)."""

    p: int
    blocks: tuple[tuple[int, int, int], ...]

    @classmethod
    def of(cls, D: DiagonalForm) -> "Jordan":
        data: dict[int, list[int]] = {}
        for a, c in zip(D.exponents, D.chis()):
            r = data.setdefault(a, [0, 1])
            r[0] += 1
            r[1] *= c
        return cls(D.p, tuple((a, r, c) for a, (r, c) in sorted(data.items())))

    def block(self, a: int) -> tuple[int, int]:
        for e, r, c in self.blocks:
            if e == a:
                return r, c
        return 0, 1

    def rank(self) -> int:
        return sum(r for _, r, _ in self.blocks)

    def shifted(self) -> "Jordan":
        """Data of S1 + pU for S = U + pS1."""
        out = []
        for a, r, c in self.blocks:
            out.append((1 if a == 0 else a - 1, r, c))
        merged: dict[int, list[int]] = {}
        for a, r, c in out:
            x = merged.setdefault(a, [0, 1])
            x[0] += r
            x[1] *= c
        return Jordan(self.p, tuple((a, r, c) for a, (r, c) in sorted(merged.items())))

    def to_form(self, ctx: PrimeContext) -> DiagonalForm:
        exps, units = [], []
        for a, r, c in self.blocks:
            exps += [a] * r
            units += [1] * (r - 1) + [1 if c == 1 else ctx.delta]
        return DiagonalForm.make(ctx, exps, units)


def unary_density(S: DiagonalForm, c) -> Fraction:
    """Exact alpha_p(S, <c>) for diagonal S and p-integral nonzero c.

    With S = U + pS1 (U unimodular of rank k),
    alpha(S, c) = p^{1-k} N'_U(c) + p^{1-k} alpha(S1 + pU, c/p) [if p | c],
    where N'_U(c) counts nonzero u mod p with U[u] = c.
    """
    p = S.p
    c = Fraction(c)
    if c == 0:
        raise ValueError("unary density of 0 is not finite")
    if ordp(c, p) < 0:
        return Fraction(0)
    J = Jordan.of(S)
    if any(a < 0 for a, _, _ in J.blocks):
        raise FormError("S must be p-integral")
    return _unary(J, c)


def _unary(J: Jordan, c: Fraction) -> Fraction:
    p = J.p
    k, dc = J.block(0)
    v = ordp(c, p)
    cres = 0 if v > 0 else mod_pt(c, p, 1)
    out = Fraction(p) ** (1 - k) * _fp_count(k, dc, cres, p)
    if v > 0:
        out += Fraction(p) ** (1 - k) * _unary(J.shifted(), c / p)
    return out


@dataclass(frozen=True)
class Factor:
    label: str
    value: Fraction
    method: str  # "unary", "scaling" or "bruteforce"


@dataclass(frozen=True)
class Reduction:
    """alpha_p(S, T) written as a product of labelled factors."""

    S: DiagonalForm
    T: DiagonalForm
    factors: tuple[Factor, ...]
    residual: tuple[DiagonalForm, DiagonalForm] | None

    @property
    def complete(self) -> bool:
        return self.residual is None

    def value(self) -> Fraction:
        if self.residual is not None:
            raise NotReducible(f"residual {self.residual[1]} in {self.residual[0]} needs brute force")
        out = Fraction(1)
        for f in self.factors:
            out *= f.value
        return out


def _hensel_vector(D: DiagonalForm, eps: Fraction, t: int) -> list[int]:
    """x mod p^t with D[x] = eps, supported on the unimodular block."""
    p = D.p
    q = p**t
    unit_idx = [i for i, a in enumerate(D.exponents) if a == 0]
    s = [mod_pt(D.entries()[i], p, t) for i in unit_idx]
    e = mod_pt(eps, p, t)
    for r in product(range(p), repeat=len(unit_idx)):
        if (sum(si * ri * ri for si, ri in zip(s, r)) - e) % p == 0 and any(r):
            break
    else:
        raise NotReducible(f"{D} does not represent the unit {eps}")
    x = list(r)
    j = next(i for i, ri in enumerate(x) if ri % p)
    m = p
    for _ in range(1, t):
        m *= p
        f = sum(si * xi * xi for si, xi in zip(s, x)) - e
        x[j] = (x[j] - f * pow(2 * s[j] * x[j], -1, m)) % m
    full = [0] * D.n
    for i, xi in zip(unit_idx, x):
        full[i] = xi % q
    return full


def orthogonal_complement(D: DiagonalForm, eps) -> DiagonalForm:
    """Class of M with M + <eps> = D, by Hensel lifting a vector and projecting.

    The result is cross-checked against Witt cancellation on Jordan data.
    """
    p = D.p
    ctx = D.ctx
    t = max(D.exponents) + 3
    q = p**t
    x = _hensel_vector(D, Fraction(eps), t)
    d = [mod_pt(e, p, t) for e in D.entries()]
    i0 = next(i for i, xi in enumerate(x) if xi % p)
    Qx = sum(di * xi * xi for di, xi in zip(d, x)) % q
    inv = pow(Qx, -1, q)
    basis = []
    for k in range(D.n):
        if k == i0:
            continue
        Bxk = d[k] * x[k]
        v = [(-Bxk * inv * xi) % q for xi in x]
        v[k] = (v[k] + 1) % q
        basis.append(v)
    gram = [[sum(di * u[l] * w[l] for l, di in enumerate(d)) % q for w in basis] for u in basis]
    M = diagonalize(SymForm.from_rows(gram), ctx)
    # the Gram matrix is only known mod p^t; entries divisible by p^t are
    # beyond the largest Jordan exponent, so none should survive
    if max(M.exponents, default=0) >= t:
        raise ArithmeticError("precision too low for the orthogonal complement")
    J = Jordan.of(D)
    k0, c0 = J.block(0)
    expected = Jordan(p, tuple(
        (a, r - (a == 0), c * (chi(eps, p) if a == 0 else 1))
        for a, r, c in J.blocks if not (a == 0 and r == 1))).to_form(ctx)
    if M != expected:
        raise AssertionError(f"complement {M} disagrees with cancellation {expected}")
    return M


def _anisotropic_unimodular(J: Jordan) -> bool:
    k, c = J.block(0)
    if k == 0 or k == 1:
        return True
    if k == 2:
        return chi(-1, J.p) * c == -1
    return False


def reduce(S: DiagonalForm, T: DiagonalForm, bruteforce_t: int | None = None) -> Reduction:
    """Write alpha_p(S, T) as a product of exactly computable factors.

    Steps, applied until T is empty:
      * a unit entry eps of T: alpha(S, eps + T') = alpha(S, eps) alpha(M, T')
        with M the orthogonal complement of a vector of length eps;
      * T = 0 mod p and the unimodular part U of S = U + pS1 anisotropic mod p:
        alpha(S, T) = p^{n(n+1)/2 - nk} alpha(S1 + pU, T/p).
    If neither applies a residual (S, T) is left; when ``bruteforce_t`` is
    given it is evaluated by the counting oracle at that precision.
    Raises NotReducible when T has no unimodular entry to begin with.
    """
    if T.exponents and T.exponents[0] != 0:
        raise NotReducible(f"{T} has no unimodular block")
    ctx = S.ctx
    p = S.p
    factors: list[Factor] = []
    cur_S, cur_T = S, T
    while cur_T.n:
        if cur_T.exponents[0] == 0:
            idx = cur_T.exponents.index(0)
            eps = Fraction(cur_T.units[idx])
            val = unary_density(cur_S, eps)
            factors.append(Factor(f"alpha({cur_S.label()}; {'1' if eps == 1 else 'D'})", val, "unary"))
            if val == 0:
                return Reduction(S, T, tuple(factors), None)
            rest_e = list(cur_T.exponents[:idx] + cur_T.exponents[idx + 1:])
            rest_u = list(cur_T.units[:idx] + cur_T.units[idx + 1:])
            cur_S = orthogonal_complement(cur_S, eps)
            cur_T = DiagonalForm.make(ctx, rest_e, rest_u)
            continue
        J = Jordan.of(cur_S)
        if _anisotropic_unimodular(J):
            n = cur_T.n
            k, _ = J.block(0)
            N = n * (n + 1) // 2
            factors.append(Factor(f"p^({N - n * k}) scaling", Fraction(p) ** (N - n * k), "scaling"))
            cur_S = J.shifted().to_form(ctx)
            cur_T = cur_T.scaled(-1)
            continue
        if bruteforce_t is None:
            return Reduction(S, T, tuple(factors), (cur_S, cur_T))
        res = density_bruteforce(cur_S, cur_T, bruteforce_t, check_next=False)
        factors.append(Factor(f"alpha({cur_S.label()}; {cur_T.label()}) t={bruteforce_t}",
                              res.density, "bruteforce"))
        return Reduction(S, T, tuple(factors), None)
    return Reduction(S, T, tuple(factors), None)


# ---------------------------------------------------------------------------
# Named forms and closed-form polynomials


def named_form(ctx: PrimeContext, name: str) -> DiagonalForm:
    """The rank-4 forms S, H4, S', S~', S'split and N0 as diagonal forms."""
    p, D = ctx.p, ctx.delta
    table = {
        "S": [1, -1, 1, -D],
        "H4": [1, -1, 1, -1],
        "S'": [1, -1, p, -p * D],
        "S~'": [1, D, p, -p * D],
        "S'split": [1, -D, -p, p * D],
        "N0": [1, 1, 1, D],
    }
    if name not in table:
        raise FormError(f"unknown named form {name!r}; choose from {sorted(table)}")
    return DiagonalForm.from_entries(ctx, table[name])


def with_hyperbolic(S: DiagonalForm, r: int) -> DiagonalForm:
    """S + H_{2r}."""
    ents = S.entries() + [Fraction(1), Fraction(-1)] * r
    return DiagonalForm.from_entries(S.ctx, ents)


_POLY_CACHE: dict = {}
_POLY_LOCK = threading.Lock()


def _cached(key, build):
    with _POLY_LOCK:
        if key in _POLY_CACHE:
            return _POLY_CACHE[key]
    val = build()
    with _POLY_LOCK:
        _POLY_CACHE[key] = val
    return val


def closed_form_unary(ctx: PrimeContext, S_id: str, eps) -> DensityPolynomial:
    """alpha_p(S_id + H_{2r}, eps) as a polynomial in X = p^{-r}.

    The values do not depend on the unit eps; it is still checked to be a unit.
    ``S`` and ``H4`` are families in X; ``S'`` and ``S~'`` are constants.
    """
    chi(eps, ctx.p)
    p = Fraction(ctx.p)
    if S_id == "S":
        return DensityPolynomial.of(1, p**-2, provenance="closed-form unary density of S")
    if S_id == "H4":
        return DensityPolynomial.of(1, -(p**-2), provenance="closed-form unary density of H4")
    if S_id == "S'":
        return DensityPolynomial.of(1 - 1 / p, provenance="closed-form unary density of S'")
    if S_id == "S~'":
        return DensityPolynomial.of(1 + chi(-1, ctx.p) / p, provenance="closed-form unary density of S~'")
    raise FormError(f"unsupported form {S_id!r}; expected S, H4, S' or S~'")


def kitaoka_signs(T: DiagonalForm) -> tuple[int, int]:
    """(sigma, chi(T)) for T = diag(u1, e2 p^a2, e3 p^a3) with a1 = 0."""
    if T.n != 3:
        raise FormError("Kitaoka formula needs rank 3")
    a1, a2, a3 = T.exponents
    if a1 != 0:
        raise FormError("Kitaoka formula needs a1 = 0")
    p = T.p
    # the signs only involve block-invariant combinations of the units
    c1, c2, c3 = T.chis()
    cm1 = chi(-1, p)
    sigma = cm1 * c1 * c2
    if a2 % 2 == 0:
        chiT = 1 if a3 % 2 == 0 else sigma
    else:
        chiT = cm1 * c1 * c3 if a3 % 2 == 0 else cm1 * c2 * c3
    return sigma, chiT


def kitaoka_quotient(T: DiagonalForm) -> DensityPolynomial:
    """alpha_p(H_{2r+4}, T) / ((1 - p^-2 X)(1 - p^-2 X^2)) for T with a1 = 0.

    The leading unit of T plays the role of eps_1 Delta.
    """
    a1, a2, a3 = T.exponents
    sigma, chiT = kitaoka_signs(T)
    p = T.p
    deg = a2 + a3
    c = [Fraction(0)] * (deg + 1)
    if a2 % 2 == 0:
        for l in range(a2 // 2):
            c[2 * l] += p**l
            c[a2 + a3 - 2 * l] += chiT * p**l
        for j in range(a3 - a2 + 1):
            c[a2 + j] += p ** (a2 // 2) * sigma**j
    else:
        for l in range((a2 - 1) // 2 + 1):
            c[2 * l] += p**l
            c[a2 + a3 - 2 * l] += chiT * p**l
    return DensityPolynomial(tuple(c), f"Kitaoka quotient for {T}")


def _h4_factor(p: int) -> DensityPolynomial:
    q = Fraction(1, p * p)
    return DensityPolynomial.of(1, -q) * DensityPolynomial.of(1, 0, -q)


def kitaoka_H4(T: DiagonalForm, quotient: bool = False) -> DensityPolynomial:
    """A_{H4,T}(X) = alpha_p(H_{2r+4}, T), or the bracketed quotient when asked."""
    key = ("H4", T, quotient)

    def build():
        K = kitaoka_quotient(T)
        if quotient:
            return K
        return (_h4_factor(T.p) * K).with_provenance(f"A_H4 for {T}")

    return _cached(key, build)


def twist_leading_unit(T: DiagonalForm) -> DiagonalForm:
    """Multiply the first diagonal entry by Delta."""
    e = T.entries()
    e[0] *= T.ctx.delta
    return DiagonalForm.from_entries(T.ctx, e)


def assembled_A(T: DiagonalForm, S_id: str = "S") -> DensityPolynomial:
    """A_{S,T}(X) for T with a1 = 0.

    For the unimodular form S = diag(1, -1, 1, -Delta):
        A_{S,T} = A_{S,eps1} / A_{H4,eps1 Delta} * A_{H4, T twisted by Delta},
    computed by exact polynomial division.  For the split form H4 the
    Kitaoka polynomial is used directly.
    """
    if T.n != 3 or T.exponents[0] != 0:
        raise FormError("assembled density needs rank 3 with a1 = 0")
    key = ("A", S_id, T)

    def build():
        if S_id == "H4":
            return kitaoka_H4(T).with_provenance(f"A_H4,T for {T}")
        if S_id != "S":
            raise FormError("assembled density is available for S and H4")
        num = closed_form_unary(T.ctx, "S", 1) * kitaoka_H4(twist_leading_unit(T))
        den = closed_form_unary(T.ctx, "H4", T.ctx.delta)
        return num.exact_div(den).with_provenance(f"A_S,T for {T}")

    return _cached(key, build)


def reduced_S_density(T: DiagonalForm, r: int, S_id: str = "S",
                      bruteforce_t: int | None = None) -> Fraction:
    """alpha_p(S_id + H_{2r}, T) through the reduction pipeline."""
    S = with_hyperbolic(named_form(T.ctx, S_id), r)
    return reduce(S, T, bruteforce_t).value()
