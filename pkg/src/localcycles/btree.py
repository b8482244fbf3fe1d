"""The Bruhat-Tits tree of PGL_2(Q_{p^2}) and sigma-linear special
endomorphisms acting on it.

Vertices.  Every homothety class of Z_{p^2}-lattices has a unique
representative L with p^n Lambda_0 c L c Lambda_0 and L not in p Lambda_0,
where Lambda_0 = Z_{p^2}^2 and n is the distance to the base vertex.  Then
L = R v + p^n Lambda_0 for a primitive v, unique up to R^x, and v is
normalized to (1, y) or (x, 1) with p | x, coordinates mod p^n.  A
:class:`LatticeClass` stores (n, kind, a, b) with the free coordinate
a + b*delta mod p^n.

Endomorphisms.  beta = M sigma with M = [[a, b], [c, a^sigma]], b = b' delta,
c = c' delta, acts on lattices by L -> M sigma(L).  Writing a = x + y delta,
the coordinates (x, y, b', c') identify the special endomorphisms with Q_p^4
carrying Q''(beta) = x^2 - Delta y^2 - Delta b' c'.  All matrix arithmetic
is exact in Q(delta), so images and containments are computed without
truncation.

Points of the tree other than vertices that matter here are edge midpoints;
a :class:`Point` is a sorted tuple of one vertex or two adjacent vertices.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product
from typing import Iterable, Sequence

from .padic import INF, PrimeContext, QuadNumber, chi, ordp, unit_part
from .qform import DiagonalForm, FormError, represents_in


class NotRepresentable(ValueError):
    """The target form is not represented by the space of special endomorphisms."""


class WrongCase(ValueError):
    """Inputs fall outside the case a closed formula covers."""


class BudgetError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Vertices


@dataclass(frozen=True, order=True)
class LatticeClass:
    n: int
    kind: int = 0  # 0: v = (1, y), 1: v = (x, 1) with p | x
    a: int = 0
    b: int = 0

    def key(self) -> str:
        return f"{self.n}.{self.kind}.{self.a}.{self.b}"

    def truncate(self, k: int, p: int) -> "LatticeClass":
        if k >= self.n:
            return self
        if k == 0:
            return BASE
        m = p**k
        return LatticeClass(k, self.kind, self.a % m, self.b % m)

    def basis(self, p: int, delta: int) -> list[list[QuadNumber]]:
        """2x2 matrix whose columns span the normalized lattice."""
        z = QuadNumber(0, 0, delta)
        one = QuadNumber(1, 0, delta)
        if self.n == 0:
            return [[one, z], [z, one]]
        free = QuadNumber(self.a, self.b, delta)
        pn = QuadNumber(p**self.n, 0, delta)
        if self.kind == 0:
            return [[one, z], [free, pn]]
        return [[free, pn], [one, z]]


BASE = LatticeClass(0)


def parent(v: LatticeClass, p: int) -> LatticeClass:
    if v.n == 0:
        raise ValueError("the base vertex has no parent")
    return v.truncate(v.n - 1, p)


def children(v: LatticeClass, p: int) -> list[LatticeClass]:
    if v.n == 0:
        out = [LatticeClass(1, 0, a, b) for a in range(p) for b in range(p)]
        out.append(LatticeClass(1, 1, 0, 0))
        return out
    m = p**v.n
    return [LatticeClass(v.n + 1, v.kind, v.a + m * s, v.b + m * t)
            for s in range(p) for t in range(p)]


def neighbors(v: LatticeClass, p: int) -> list[LatticeClass]:
    out = children(v, p)
    if v.n:
        out.append(parent(v, p))
    return out


def common_depth(u: LatticeClass, v: LatticeClass, p: int) -> int:
    """Depth of the last common ancestor of u and v (rooted at the base)."""
    if u.n == 0 or v.n == 0 or u.kind != v.kind:
        return 0
    k = min(u.n, v.n)
    while k > 0 and u.truncate(k, p) != v.truncate(k, p):
        k -= 1
    return k


def distance(u: LatticeClass, v: LatticeClass, p: int) -> int:
    return u.n + v.n - 2 * common_depth(u, v, p)


def vertex_path(u: LatticeClass, v: LatticeClass, p: int) -> list[LatticeClass]:
    k = common_depth(u, v, p)
    up = [u.truncate(i, p) for i in range(u.n, k - 1, -1)]
    down = [v.truncate(i, p) for i in range(k + 1, v.n + 1)]
    return up + down


def ball(radius: int, p: int, limit: int = 2_000_000) -> dict[LatticeClass, list[LatticeClass]]:
    """Vertices within ``radius`` of the base, with their in-ball neighbours."""
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    size = ball_size(radius, p)
    if size > limit:
        raise BudgetError(f"ball of radius {radius} has {size} vertices (limit {limit})")
    layer = [BASE]
    verts = [BASE]
    for _ in range(radius):
        layer = [c for v in layer for c in children(v, p)]
        verts += layer
    adj = {v: [] for v in verts}
    for v in verts:
        if v.n:
            w = parent(v, p)
            adj[v].append(w)
            adj[w].append(v)
    return adj


def ball_size(radius: int, p: int) -> int:
    q = p * p
    if radius == 0:
        return 1
    return 1 + (q + 1) * (q**radius - 1) // (q - 1)


# ---------------------------------------------------------------------------
# Special endomorphisms


def _mat_mul(A, B):
    return [[A[i][0] * B[0][j] + A[i][1] * B[1][j] for j in range(2)] for i in range(2)]


def _conj(A):
    return [[x.conj() for x in row] for row in A]


def _det(A) -> QuadNumber:
    return A[0][0] * A[1][1] - A[0][1] * A[1][0]


def _inv(A):
    d = _det(A)
    return [[A[1][1] / d, -A[0][1] / d], [-A[1][0] / d, A[0][0] / d]]


def _val(x: QuadNumber, p: int):
    return x.valuation(p)


@dataclass(frozen=True)
class SpecialEndo:
    """beta = [[x + y d, b' d], [c' d, x - y d]] sigma."""

    ctx: PrimeContext
    coords: tuple[Fraction, Fraction, Fraction, Fraction]

    @classmethod
    def from_coords(cls, ctx: PrimeContext, coords: Sequence) -> "SpecialEndo":
        return cls(ctx, tuple(Fraction(c) for c in coords))

    @property
    def p(self) -> int:
        return self.ctx.p

    def matrix(self) -> list[list[QuadNumber]]:
        x, y, b, c = self.coords
        D = self.ctx.delta
        return [[QuadNumber(x, y, D), QuadNumber(0, b, D)],
                [QuadNumber(0, c, D), QuadNumber(x, -y, D)]]

    def norm(self) -> Fraction:
        """Q''(beta), defined by beta^2 = Q''(beta) * identity."""
        x, y, b, c = self.coords
        D = self.ctx.delta
        return x * x - D * y * y - D * b * c

    def ord(self) -> int:
        q = self.norm()
        if q == 0:
            raise ValueError("Q''(beta) = 0")
        return ordp(q, self.p)

    def compose(self, other: "SpecialEndo"):
        """Matrix of the C-linear map beta o beta' = M sigma(M')."""
        return _mat_mul(self.matrix(), _conj(other.matrix()))

    def square_is_scalar(self) -> bool:
        S = self.compose(self)
        q = self.norm()
        return S[0][1].is_zero() and S[1][0].is_zero() and S[0][0] == q and S[1][1] == q

    def image(self, v: LatticeClass) -> LatticeClass:
        B = v.basis(self.p, self.ctx.delta)
        return normalize_lattice(_mat_mul(self.matrix(), _conj(B)), self.p)

    def stabilizes(self, v: LatticeClass) -> bool:
        """beta(L) contained in L, tested by integrality of B^-1 M sigma(B)."""
        B = v.basis(self.p, self.ctx.delta)
        C = _mat_mul(_inv(B), _mat_mul(self.matrix(), _conj(B)))
        return all(_val(x, self.p) >= 0 for row in C for x in row)


def bilinear(ctx: PrimeContext, u: Sequence, v: Sequence) -> Fraction:
    """B(beta, beta') with beta beta' + beta' beta = 2 B(beta, beta')."""
    D = ctx.delta
    return (Fraction(u[0]) * v[0] - D * Fraction(u[1]) * v[1]
            - D * (Fraction(u[2]) * v[3] + Fraction(u[3]) * v[2]) / 2)


def anticommute(b1: SpecialEndo, b2: SpecialEndo) -> bool:
    A = b1.compose(b2)
    B = b2.compose(b1)
    return all((A[i][j] + B[i][j]).is_zero() for i in range(2) for j in range(2))


def normalize_lattice(C, p: int) -> LatticeClass:
    """Class of the lattice spanned by the columns of C."""
    entries = [x for row in C for x in row]
    k = min(_val(x, p) for x in entries)
    if k == INF:
        raise ValueError("zero matrix spans no lattice")
    scale = Fraction(1, 1) / Fraction(p) ** k
    C = [[x * scale for x in row] for row in C]
    d = _val(_det(C), p)
    if d == INF:
        raise ValueError("degenerate lattice")
    if d == 0:
        return BASE
    col = next(j for j in range(2) if min(_val(C[0][j], p), _val(C[1][j], p)) == 0)
    c1, c2 = C[0][col], C[1][col]
    m = p**d
    if _val(c1, p) == 0:
        a, b = (c2 / c1).residue(p, d)
        return LatticeClass(d, 0, a % m, b % m)
    a, b = (c1 / c2).residue(p, d)
    return LatticeClass(d, 1, a % m, b % m)


def apply_endo(beta: SpecialEndo, v: LatticeClass) -> LatticeClass:
    return beta.image(v)


def distance_to_fixed_set(beta: SpecialEndo, v: LatticeClass) -> Fraction:
    """Half the distance from v to beta(v): the nearest fixed point is the midpoint."""
    return Fraction(distance(v, beta.image(v), beta.p), 2)


def in_tube(beta: SpecialEndo, v: LatticeClass) -> bool:
    return distance_to_fixed_set(beta, v) <= Fraction(beta.ord(), 2)


def fixed_vertices(beta: SpecialEndo, radius: int) -> list[LatticeClass]:
    return [v for v in ball(radius, beta.p) if beta.image(v) == v]


def classify_fixed_set(beta: SpecialEndo) -> str:
    """'subtree' (a copy of the tree of PGL_2(Q_p)) or 'midpoint'."""
    return "subtree" if beta.ord() % 2 == 0 else "midpoint"


# ---------------------------------------------------------------------------
# Points (vertices and edge midpoints) and the midpoint cascade


Point = tuple  # sorted tuple of one vertex or two adjacent vertices


def point(*vs: LatticeClass) -> Point:
    return tuple(sorted(set(vs)))


def _subdivided_path(x: Point, y: Point, p: int) -> list[Point]:
    if x == y:
        return [x]
    best = min(((a, b) for a in x for b in y), key=lambda ab: distance(ab[0], ab[1], p))
    a, b = best
    verts = vertex_path(a, b, p)
    out: list[Point] = []
    if len(x) == 2:
        out.append(x)
    for i, v in enumerate(verts):
        if i:
            out.append(point(verts[i - 1], v))
        out.append(point(v))
    if len(y) == 2:
        out.append(y)
    return out


def midpoint(x: Point, y: Point, p: int) -> Point:
    path = _subdivided_path(x, y, p)
    L = len(path) - 1
    if L % 2:
        raise ArithmeticError("geodesic midpoint is not a vertex or edge midpoint")
    return path[L // 2]


def apply_point(beta: SpecialEndo, x: Point) -> Point:
    return point(*(beta.image(v) for v in x))


def common_fixed_point(betas: Sequence[SpecialEndo], start: Point = (BASE,)) -> Point:
    """Follow midpoints of [x, beta_i x] for i = 1..n; lands in every fixed set."""
    x = start
    for b in betas:
        x = midpoint(x, apply_point(b, x), b.p)
    for b in betas:
        if apply_point(b, x) != x:
            raise AssertionError("midpoint cascade did not reach a common fixed point")
    return x


# ---------------------------------------------------------------------------
# Triples of anticommuting endomorphisms


def n0_form(ctx: PrimeContext) -> list[Fraction]:
    """Q'' on the stabilizer lattice of the base vertex, diagonal model."""
    return [Fraction(1), Fraction(1), Fraction(1), Fraction(ctx.delta)]


def _complement(ctx: PrimeContext, vecs: list[list[Fraction]]) -> list[list[Fraction]]:
    """Basis of the B-orthogonal complement of the span of vecs in Q^4."""
    rows = [[bilinear(ctx, v, e) for e in _unit_vectors()] for v in vecs]
    return _nullspace(rows, 4)


def _unit_vectors():
    return [[Fraction(int(i == j)) for j in range(4)] for i in range(4)]


def _nullspace(rows: list[list[Fraction]], n: int) -> list[list[Fraction]]:
    M = [list(r) for r in rows]
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, len(M)) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        f = M[r][c]
        M[r] = [x / f for x in M[r]]
        for i in range(len(M)):
            if i != r and M[i][c] != 0:
                g = M[i][c]
                M[i] = [a - g * b for a, b in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * n
        v[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -M[i][fc]
        basis.append(v)
    return basis


def _q(ctx: PrimeContext, v) -> Fraction:
    return bilinear(ctx, v, v)


def _small_vectors(k: int, bound: int):
    """Integer vectors of length k ordered by max-norm, up to sign."""
    seen = set()
    for B in range(1, bound + 1):
        for c in product(range(-B, B + 1), repeat=k):
            if max(abs(x) for x in c) != B:
                continue
            neg = tuple(-x for x in c)
            if neg in seen:
                continue
            seen.add(c)
            yield c


def _find_vector(ctx: PrimeContext, basis, exponent: int, unit_chi: int, bound: int = 12):
    p = ctx.p
    for c in _small_vectors(len(basis), bound):
        v = [sum((ci * b[j] for ci, b in zip(c, basis)), Fraction(0)) for j in range(4)]
        q = _q(ctx, v)
        if q == 0:
            continue
        k = ordp(q, p)
        if (k - exponent) % 2 or chi(unit_part(q, p), p) != unit_chi:
            continue
        s = Fraction(p) ** ((exponent - k) // 2)
        return [x * s for x in v]
    return None


@dataclass(frozen=True)
class SpecialTriple:
    """Pairwise anticommuting special endomorphisms with Q'' = diag(eps_i p^r_i)."""

    target: DiagonalForm
    betas: tuple[SpecialEndo, ...]

    def verify(self) -> None:
        for b in self.betas:
            if not b.square_is_scalar():
                raise AssertionError("beta^2 is not scalar")
        for i, b in enumerate(self.betas):
            for c in self.betas[i + 1:]:
                if not anticommute(b, c):
                    raise AssertionError("endomorphisms do not anticommute")
        p = self.target.p
        for b, a, e in zip(self.betas, self.target.exponents, self.target.chis()):
            q = b.norm()
            if ordp(q, p) != a or chi(unit_part(q, p), p) != e:
                raise AssertionError("norms do not match the target form")
        got = DiagonalForm.from_entries(self.target.ctx, [b.norm() for b in self.betas])
        if got != self.target:
            raise AssertionError("Gram matrix class differs from the target")

    @property
    def r(self) -> tuple[int, ...]:
        return self.target.exponents


def construct_triple(Tq: DiagonalForm) -> SpecialTriple:
    """Anticommuting beta_1..beta_n (n <= 4) with Q''(beta) = Tq up to GL_n(Z_p).

    Built greedily: each beta_i is a small rational vector in the orthogonal
    complement of the previous ones, rescaled by a power of p to get the
    right exponent.  By Witt's theorem the greedy choice never gets stuck
    once Tq is represented, which is checked first.
    """
    ctx = Tq.ctx
    if not 1 <= Tq.n <= 4:
        raise FormError("construct_triple needs 1 to 4 diagonal entries")
    if not represents_in(Tq.entries(), n0_form(ctx), ctx.p):
        raise NotRepresentable(f"{Tq} is not represented by the special endomorphisms")
    vecs: list[list[Fraction]] = []
    for a, c in zip(Tq.exponents, Tq.chis()):
        basis = _complement(ctx, vecs) if vecs else _unit_vectors()
        v = _find_vector(ctx, basis, a, c)
        if v is None:
            raise NotRepresentable(f"no vector of class {c}*p^{a} in the complement")
        vecs.append(v)
    # order by exponent as in the target (already sorted) and verify
    triple = SpecialTriple(Tq, tuple(SpecialEndo.from_coords(ctx, v) for v in vecs))
    triple.verify()
    return triple


def gamma_case(Tq: DiagonalForm, i: int) -> str:
    """Type of gamma_i (i >= 2, 1-based) when r_1 is even.

    gamma_i^2 = -Delta^-1 eps_1^-1 eps_i p^{r_i}: a square gives 'split',
    a non-square with even order 'unramified-elliptic', odd order
    'ramified-elliptic'.
    """
    r = Tq.exponents
    if r[0] % 2:
        raise WrongCase("gamma_i are defined only for even r_1")
    if not 2 <= i <= Tq.n:
        raise ValueError("index must satisfy 2 <= i <= n")
    c = Tq.chis()
    if r[i - 1] % 2:
        return "ramified-elliptic"
    sq = chi(-1, Tq.p) * -1 * c[0] * c[i - 1]
    return "split" if sq == 1 else "unramified-elliptic"


# ---------------------------------------------------------------------------
# Tubes


@dataclass
class TubeReport:
    target: DiagonalForm
    count: int
    edges: int
    radius: int
    seed: Point
    frontier_checked: int
    cases: list[str] = field(default_factory=list)
    fixed_set_types: list[str] = field(default_factory=list)
    vertices: list[LatticeClass] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"T": self.target.scaled(1).label(), "count": self.count, "edges": self.edges,
                "radius": self.radius, "cases": self.cases,
                "fixed_set_types": self.fixed_set_types}

    def edge_list(self, p: int) -> list[tuple[str, str]]:
        vs = set(self.vertices)
        return sorted((v.key(), parent(v, p).key()) for v in vs if v.n and parent(v, p) in vs)


def tube_count(triple: SpecialTriple, max_vertices: int = 200_000) -> TubeReport:
    """Vertices and edges of the intersection of the tubes of the beta_i.

    The intersection is connected, so a breadth-first search from a vertex
    in it finds every vertex; the search stops once no neighbour of the
    found set lies in all tubes, which is asserted by checking the final
    frontier.
    """
    betas = triple.betas
    p = triple.target.p
    seed = common_fixed_point(betas)

    def member(v):
        return all(in_tube(b, v) for b in betas)

    for v in seed:
        if not member(v):
            raise AssertionError("seed vertex outside the tube")
    found = set(seed)
    queue = deque(seed)
    checked = 0
    while queue:
        v = queue.popleft()
        for w in neighbors(v, p):
            if w in found:
                continue
            checked += 1
            if member(w):
                found.add(w)
                queue.append(w)
                if len(found) > max_vertices:
                    raise BudgetError(f"tube exceeds {max_vertices} vertices")
    edges = sum(1 for v in found if v.n and parent(v, p) in found)
    if edges != len(found) - 1:
        raise AssertionError("tube is not a tree")
    radius = max(v.n for v in found)
    cases = []
    if triple.target.exponents[0] % 2 == 0:
        cases = [gamma_case(triple.target, i) for i in range(2, triple.target.n + 1)]
    return TubeReport(triple.target, len(found), edges, radius, seed, checked, cases,
                      [classify_fixed_set(b) for b in betas], sorted(found))


def tube_count_for(T: DiagonalForm) -> TubeReport:
    """Tube for a fundamental matrix T = 0 mod p, through p^-1 T."""
    if not all(a >= 1 for a in T.exponents):
        raise FormError("tube counts need T divisible by p")
    return tube_count(construct_triple(T.scaled(-1)))


def _geom(p: int, m: int) -> int:
    """1 + (p^2 - p)(1 + p^2 + ... + p^{2(m-1)}); the sum is empty for m <= 0."""
    return 1 + (p * p - p) * sum(p ** (2 * i) for i in range(max(m, 0)))


def closed_count_odd_r1(r1: int, p: int) -> int:
    """2(1 + p^2 + ... + p^{2(r1-1)/2}) for odd r1."""
    if r1 < 0 or r1 % 2 == 0:
        raise WrongCase("closed count needs odd r1")
    return 2 * sum(p ** (2 * i) for i in range((r1 - 1) // 2 + 1))


def closed_count_case1(r: Sequence[int], units: Sequence, p: int) -> int:
    """Tube size when gamma_2 is split and gamma_3 unramified elliptic."""
    r1, r2, r3 = r
    if any(x % 2 for x in r) or not r1 <= r2 <= r3:
        raise WrongCase("case (1) needs even r1 <= r2 <= r3")
    e1, e2, e3 = units
    if chi(-e1 * e2, p) != -1 or chi(-e1 * e3, p) != 1:
        raise WrongCase("case (1) needs chi(-e1 e2) = -1 and chi(-e1 e3) = 1")
    h1, h2, h3 = r1 // 2, r2 // 2, r3 // 2
    total = _geom(p, h1)
    total += (p - 1) * sum(_geom(p, min(h1, h2 - j)) for j in range(1, h2 + 1))
    total += 2 * sum(_geom(p, min(h1, h3 - k)) for k in range(1, h3 + 1))
    total += 2 * (p - 1) * sum(
        _geom(p, min(h1, h2 - j, h3 - k - j))
        for k in range(1, h3 + 1)
        for j in range(1, min(h2, h3 - k) + 1))
    return total
