"""Cross-validation checks shared by ``localcycles verify`` and the test
suite.  Each check compares exact values computed along two independent
routes and records both sides of every comparison."""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .btree import (
    NotRepresentable,
    SpecialEndo,
    WrongCase,
    ball,
    closed_count_case1,
    closed_count_odd_r1,
    common_fixed_point,
    construct_triple,
    in_tube,
    n0_form,
    neighbors,
    tube_count,
    tube_count_for,
)
from .classify import diff_set, hz_irreducible
from .density import (
    BudgetExceeded,
    assembled_A,
    closed_form_unary,
    density_bruteforce,
    derivative_at_one,
    named_form,
    reduce,
    with_hyperbolic,
)
from .eislocal import whittaker_derivative, whittaker_derivative_from_density
from .lengths import e_p
from .padic import REAL, PrimeContext, hilbert_symbol, relevant_places
from .qform import (
    DiagonalForm,
    SymForm,
    diagonalize,
    fmt_rational,
    rational_diagonalize,
    represents_in,
    represents_locally,
    space_entries,
)


@dataclass
class Comparison:
    label: str
    left: str
    right: str

    @property
    def ok(self) -> bool:
        return self.left == self.right


@dataclass
class CheckResult:
    name: str
    identity: str
    status: str  # pass, fail, skipped-budget
    comparisons: list[Comparison] = field(default_factory=list)
    seconds: float = 0.0
    note: str = ""

    @property
    def failures(self) -> list[Comparison]:
        return [c for c in self.comparisons if not c.ok]

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "identity": self.identity,
            "status": self.status,
            "comparisons": len(self.comparisons),
            "failures": [{"label": c.label, "left": c.left, "right": c.right}
                         for c in self.failures],
            "seconds": round(self.seconds, 2),
            "note": self.note,
        }


def _s(x) -> str:
    if isinstance(x, (Fraction, int)) and not isinstance(x, bool):
        return fmt_rational(x)
    return str(x)


class _Recorder:
    def __init__(self):
        self.items: list[Comparison] = []

    def eq(self, label: str, left, right) -> None:
        self.items.append(Comparison(label, _s(left), _s(right)))

    def true(self, label: str, cond: bool) -> None:
        self.items.append(Comparison(label, _s(bool(cond)), "True"))


def _patterns(ctx: PrimeContext, exps, n: int = 3):
    """Distinct diagonal forms with the given exponents and all unit patterns."""
    seen = []
    for us in itertools.product([1, ctx.delta], repeat=n):
        T = DiagonalForm.make(ctx, exps, us)
        if T not in seen:
            seen.append(T)
    return seen


def _sweep(ctx: PrimeContext, max_sum: int = 4):
    """Rank-3 forms with a1 = 0 and a2 + a3 <= max_sum."""
    for a2 in range(max_sum + 1):
        for a3 in range(a2, max_sum + 1 - a2):
            yield from _patterns(ctx, (0, a2, a3))


# ---------------------------------------------------------------------------
# the ten checks


def check_unary(rec: _Recorder, seed: int) -> None:
    for p in (3, 5):
        ctx = PrimeContext.create(p)
        for S_id in ("S", "H4"):
            for eps in (1, ctx.delta):
                poly = closed_form_unary(ctx, S_id, eps)
                for r in (0, 1):
                    S = with_hyperbolic(named_form(ctx, S_id), r)
                    res = density_bruteforce(S, DiagonalForm.from_entries(ctx, [eps]), 1, ctx)
                    rec.true(f"p={p} {S_id}+H{2 * r} eps={eps}: t and t+1 agree", res.stabilized)
                    rec.eq(f"p={p} {S_id}+H{2 * r} eps={eps}", res.density,
                           poly(Fraction(1, p**r)))


def check_twisted_density(rec: _Recorder, seed: int) -> None:
    oracle_done = False
    for p in (3, 5):
        ctx = PrimeContext.create(p)
        Sp = named_form(ctx, "S'")
        want = 2 * Fraction(1, p) * (p * p - 1)
        n = 0
        for T in _sweep(ctx, 3):
            if not represents_locally(T, "V'"):
                continue
            n += 1
            rec.eq(f"p={p} reduce(S', {T})", reduce(Sp, T).value(), want)
            if p == 3 and not oracle_done:
                res = density_bruteforce(Sp, T, 2, ctx, check_next=False)
                rec.eq(f"p=3 brute force t=2 (S', {T})", res.density, want)
                oracle_done = True
        rec.true(f"p={p}: at least 4 valid T (found {n})", n >= 4)


def check_inert_derivative(rec: _Recorder, seed: int) -> None:
    for p in (3, 5):
        ctx = PrimeContext.create(p)
        p2 = Fraction(1, p * p)
        for T in _sweep(ctx):
            if represents_locally(T, "V"):
                continue
            want = -(1 + p2) * (1 - p2) * e_p(T).value
            rec.eq(f"p={p} dA/dX(1) for {T}", derivative_at_one(assembled_A(T, "S")), want)


def check_split_derivative(rec: _Recorder, seed: int) -> None:
    for p in (3, 5):
        ctx = PrimeContext.create(p)
        for T in _sweep(ctx):
            if represents_in(T.entries(), named_form(ctx, "H4").entries(), p):
                continue
            a = whittaker_derivative_from_density(T, "split")
            b = whittaker_derivative(T, "split")
            rec.eq(f"p={p} split derivative for {T}", f"{_s(a.magnitude)} {a.gamma} logp",
                   f"{_s(b.magnitude)} {b.gamma} logp")


def check_tube_calibration(rec: _Recorder, seed: int) -> None:
    ctx = PrimeContext.create(3)
    p = 3
    T = DiagonalForm.make(ctx, (1, 1, 1), (1, 1, 1))
    rec.eq("tube count for diag(p,p,p)", tube_count_for(T).count, 1)
    for exps in [(1, 1, 2), (1, 2, 2), (1, 2, 3), (3, 3, 4), (3, 4, 4)]:
        found = 0
        for Tq in _patterns(ctx, exps):
            try:
                triple = construct_triple(Tq)
            except NotRepresentable:
                continue
            found += 1
            rec.eq(f"odd r1 tube count for Tq={Tq}", tube_count(triple).count,
                   closed_count_odd_r1(exps[0], p))
        rec.true(f"representable Tq with exponents {exps}", found > 0)


def _case1_instances(ctx: PrimeContext, r):
    for Tq in _patterns(ctx, r):
        units = [1 if c == 1 else ctx.delta for c in Tq.chis()]
        try:
            closed = closed_count_case1(r, units, ctx.p)
        except WrongCase:
            continue
        yield Tq, closed


def check_case1(rec: _Recorder, seed: int) -> None:
    ctx = PrimeContext.create(3)
    for r in [(0, 0, 0), (0, 0, 2), (2, 2, 2), (0, 2, 4)]:
        found = 0
        for Tq, closed in _case1_instances(ctx, r):
            found += 1
            rec.eq(f"case (1) count for Tq={Tq}", tube_count(construct_triple(Tq)).count, closed)
        rec.true(f"case (1) unit pattern exists for r={r}", found > 0)


def check_tube_density(rec: _Recorder, seed: int) -> None:
    ctx = PrimeContext.create(3)
    p = 3
    N0 = named_form(ctx, "N0")
    n = 0
    for exps in itertools.combinations_with_replacement([0, 1], 3):
        for Tq in _patterns(ctx, exps):
            try:
                count = tube_count(construct_triple(Tq)).count
            except NotRepresentable:
                count = 0
            dens = density_bruteforce(N0, Tq, 2, ctx, check_next=False).density
            rec.eq(f"count*(1-p^-4) vs density for Tq={Tq}",
                   count * (1 - Fraction(1, p**4)), dens)
            n += 1
    rec.true(f"at least 5 instances (ran {n})", n >= 5)


def check_irreducibility(rec: _Recorder, seed: int) -> None:
    ctx = PrimeContext.create(3)
    for exps in itertools.combinations_with_replacement([1, 2, 3], 3):
        for T in _patterns(ctx, exps):
            Tq = T.scaled(-1)
            if not represents_in(Tq.entries(), n0_form(ctx), ctx.p):
                continue
            count = tube_count(construct_triple(Tq)).count
            rec.eq(f"irreducible({T}) vs count==1 (count {count})", hz_irreducible(T), count == 1)


def _random_rational(rng: random.Random) -> Fraction:
    num = rng.choice([-1, 1]) * rng.randint(1, 200)
    den = rng.randint(1, 30)
    return Fraction(num, den)


def _random_unimodular(rng: random.Random, n: int) -> list[list[int]]:
    """Product of random elementary matrices and a sign flip: det = +-1."""
    U = [[int(i == j) for j in range(n)] for i in range(n)]
    for _ in range(3 * n):
        i, j = rng.sample(range(n), 2)
        f = rng.randint(-4, 4)
        for k in range(n):
            U[i][k] += f * U[j][k]
    k = rng.randrange(n)
    U[k] = [-x for x in U[k]]
    return U


def _random_form(rng: random.Random, p: int, n: int = 3) -> SymForm:
    while True:
        rows = [[0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                x = rng.randint(-6, 6) * p ** rng.choice([0, 0, 1, 2])
                rows[i][j] = rows[j][i] = x
        T = SymForm.from_rows(rows)
        if T.det() != 0:
            return T


def _random_endo(rng: random.Random, ctx: PrimeContext) -> SpecialEndo:
    while True:
        b = SpecialEndo.from_coords(ctx, [rng.randint(-9, 9) for _ in range(4)])
        if b.norm() != 0:
            return b


def check_properties(rec: _Recorder, seed: int) -> None:
    rng = random.Random(seed)
    # product formula for the Hilbert symbol
    for _ in range(200):
        a, b = _random_rational(rng), _random_rational(rng)
        prod = 1
        for v in relevant_places(a, b):
            prod *= hilbert_symbol(a, b, v)
        rec.eq(f"product of ({a},{b})_v over all places", prod, 1)
    # GL_n(Z_p)-invariance of the Jordan data
    ctx = PrimeContext.create(3)
    for _ in range(50):
        T = _random_form(rng, 3)
        U = _random_unimodular(rng, 3)
        rec.eq("diagonalize(T) vs diagonalize(U T U^t)", diagonalize(T, ctx),
               diagonalize(T.conjugate(U), ctx))
    # stability of a lattice vs distance to the fixed set
    B = ball(3, 3)
    for _ in range(10):
        beta = _random_endo(rng, ctx)
        bad = sum(1 for v in B if beta.stabilizes(v) != in_tube(beta, v))
        rec.eq(f"stabilizes vs in_tube over radius-3 ball, beta={beta.coords}", bad, 0)
    # fixed-set type from ord Q'' vs enumeration
    for _ in range(10):
        beta = _random_endo(rng, ctx)
        fixed = [v for v in B if beta.image(v) == v]
        pt = common_fixed_point([beta])
        if beta.ord() % 2:
            rec.eq(f"odd ord: fixed vertices in ball, beta={beta.coords}", len(fixed), 0)
            rec.eq(f"odd ord: fixed point is a midpoint, beta={beta.coords}", len(pt), 2)
        else:
            rec.eq(f"even ord: fixed point is a vertex, beta={beta.coords}", len(pt), 1)
            inner = [v for v in fixed if v.n < 3]
            degs = {sum(1 for w in neighbors(v, 3) if beta.image(w) == w) for v in inner}
            rec.true(f"even ord: fixed vertices form a {ctx.p + 1}-regular subtree, "
                     f"beta={beta.coords}", bool(fixed) and degs <= {ctx.p + 1})


def check_dichotomy(rec: _Recorder, seed: int) -> None:
    rng = random.Random(seed + 1)
    ctx = PrimeContext.create(3)
    p = 3
    V, Vp = space_entries(ctx, "V"), space_entries(ctx, "V'")
    for _ in range(100):
        T = _random_form(rng, p)
        D = diagonalize(T, ctx) if T.is_integral(p) else None
        ents = D.entries() if D else None
        if ents is None:
            continue
        a, b = represents_in(ents, V, p), represents_in(ents, Vp, p)
        rec.eq(f"exactly one of V, V' represents {D}", int(a) + int(b), 1)
        rec.eq(f"represents_locally agrees for {D}", represents_locally(D, "V"), a)
        diff = diff_set(T, ctx)
        rec.eq(f"p in Diff iff not represented by V_p, T={_rows(T)}", p in diff, not a)
        pos = all(x > 0 for x in rational_diagonalize(T))
        if pos:
            rec.eq(f"|Diff| is odd, T={_rows(T)}", len(diff) % 2, 1)
        rec.eq(f"real place in Diff iff T indefinite, T={_rows(T)}", REAL in diff, not pos)
    S, Sp = named_form(ctx, "S"), named_form(ctx, "S'")
    for exps in itertools.combinations_with_replacement([0, 1], 3):
        for T in _patterns(ctx, exps):
            d = density_bruteforce(S, T, 2, ctx, check_next=False).density
            dp = density_bruteforce(Sp, T, 2, ctx, check_next=False).density
            rec.eq(f"V represents {T} iff density(S) > 0", represents_locally(T, "V"), d > 0)
            rec.eq(f"V' represents {T} iff density(S') > 0", represents_locally(T, "V'"), dp > 0)


def _rows(T: SymForm) -> str:
    return str([[_s(x) for x in r] for r in T.gram])


@dataclass(frozen=True)
class Check:
    name: str
    identity: str
    run: Callable[[_Recorder, int], None]
    heavy: bool = False


CHECKS: dict[str, Check] = {c.name: c for c in [
    Check("c01-unary-densities",
          "brute-force unary densities equal 1 + p^-2 X (S) and 1 - p^-2 X (H4)", check_unary),
    Check("c02-twisted-density",
          "alpha(S', T) = 2 p^-1 (p^2 - 1) for T represented by V'_p", check_twisted_density),
    Check("c03-inert-derivative",
          "dA_{S,T}/dX at 1 = -(1 + p^-2)(1 - p^-2) e_p(T)", check_inert_derivative),
    Check("c04-split-derivative",
          "split derivative through H4 = gV log p (1 - p^-2)^2 e_p(T)", check_split_derivative),
    Check("c05-tube-calibration",
          "tube count 1 for diag(p,p,p); 2(1 + p^2 + ...) for odd r1", check_tube_calibration),
    Check("c06-case1-closed-count",
          "closed tube count for split gamma_2, unramified elliptic gamma_3 = enumeration",
          check_case1, heavy=True),
    Check("c07-tube-density-identity",
          "tube count * (1 - p^-4) = alpha(diag(1,1,1,Delta), p^-1 T)", check_tube_density,
          heavy=True),
    Check("c08-irreducibility-enumeration",
          "irreducibility predicate <=> tube count 1", check_irreducibility, heavy=True),
    Check("c09-property-suites",
          "Hilbert product formula, Jordan invariance, stability vs distance, fixed-set type",
          check_properties, heavy=True),
    Check("c10-dichotomy-and-diff",
          "exactly one of V_p, V'_p represents T; representability vs density positivity",
          check_dichotomy, heavy=True),
]}

SUITES = {
    "all": sorted(CHECKS),
    "fast": sorted(n for n, c in CHECKS.items() if not c.heavy),
}


def select(suite: str) -> list[str]:
    if suite in SUITES:
        return SUITES[suite]
    names = [s.strip() for s in suite.split(",") if s.strip()]
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ValueError(f"unknown checks {unknown}; available: {sorted(CHECKS)} or suites "
                         f"{sorted(SUITES)}")
    return sorted(names)


def run_check(name: str, seed: int = 0) -> CheckResult:
    chk = CHECKS[name]
    rec = _Recorder()
    t0 = time.perf_counter()
    try:
        chk.run(rec, seed)
    except BudgetExceeded as exc:
        return CheckResult(name, chk.identity, "skipped-budget", rec.items,
                           time.perf_counter() - t0, str(exc))
    status = "pass" if rec.items and all(c.ok for c in rec.items) else "fail"
    return CheckResult(name, chk.identity, status, rec.items, time.perf_counter() - t0)


def run_suite(suite: str = "all", seed: int = 0) -> list[CheckResult]:
    return [run_check(n, seed) for n in select(suite)]
