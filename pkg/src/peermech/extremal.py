"""Extreme points of the DIC polytopes.

The polytope is ``{q >= 0 : q(X) <= 1 for every maximal clique X}``; with
mandatory allocation the clique rows are equalities. ``q <= 1`` follows
from the clique rows, so it is never stated separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from peermech.errors import GuardExceeded, PeerMechError, enumeration_guard
from peermech.fgraph import FeasibilityGraph, VertexId, components_of, drop, find_odd_holes, format_vertex, is_odd_hole
from peermech.mech import MAY, MUST, Mechanism, check_feasible, check_mode

ZERO = Fraction(0)
ONE = Fraction(1)
HALF = Fraction(1, 2)


# -- exact linear algebra ------------------------------------------------------------


def rref(rows: Sequence[Sequence[Fraction]], ncols: int) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form over the rationals; returns (rows, pivot columns)."""
    m = [list(map(Fraction, r)) for r in rows]
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(m)) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        piv = m[r][c]
        m[r] = [x / piv for x in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def null_vector(rows: Sequence[Sequence[Fraction]], ncols: int) -> list[Fraction] | None:
    """A nonzero vector in the null space, or None when the columns are independent."""
    red, pivots = rref(rows, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    if not free:
        return None
    f = free[0]
    d = [ZERO] * ncols
    d[f] = ONE
    for row, c in zip(red, pivots):
        d[c] = -row[f]
    return d


# -- extremality ---------------------------------------------------------------------


@dataclass
class ExtremalityCertificate:
    extreme: bool
    mode: str
    free: list = field(default_factory=list)  # vertices with 0 < q < 1
    tight_rows: list = field(default_factory=list)  # profiles whose clique row is tight
    rank: int = 0
    direction: dict | None = None  # vertex -> d, for not-extreme
    epsilon: Fraction | None = None

    @property
    def verdict(self) -> str:
        return "extreme" if self.extreme else "not-extreme"

    def to_json(self) -> dict:
        out = {
            "verdict": self.verdict,
            "mode": self.mode,
            "free_vertices": [format_vertex(v) for v in self.free],
            "tight_profiles": [list(t) for t in self.tight_rows],
            "rank": self.rank,
        }
        if self.direction is not None:
            out["direction"] = {format_vertex(v): str(x) for v, x in self.direction.items()}
            out["epsilon"] = str(self.epsilon)
        return out


def is_extreme(g: FeasibilityGraph, m: Mechanism, mode: str | None = None) -> ExtremalityCertificate:
    """Exact rank test. Coordinates at 0 or 1 are fixed by their bound, so
    ``m`` is extreme iff the tight clique rows restricted to the fractional
    coordinates have full column rank."""
    mode = check_mode(mode or m.mode)
    m_mode = m if m.mode == mode else Mechanism(m.type_spaces, m.q, mode)
    feas = check_feasible(g, m_mode)
    if not feas:
        raise PeerMechError(f"infeasible mechanism: clique {feas.violated_profile} has load {feas.load}")
    free = sorted(m.stochastic_vertices(), key=g.sort_key)
    col = {v: k for k, v in enumerate(free)}
    tight, rows, slack_rows = [], [], []
    for theta in g.profiles():
        clique = [VertexId(i, drop(theta, i)) for i in range(g.n)]
        load = sum((m[v] for v in clique), ZERO)
        row = [ZERO] * len(free)
        for v in clique:
            k = col.get(v)
            if k is not None:
                row[k] = ONE
        if load == 1:
            tight.append(theta)
            if any(row):
                rows.append(row)
        elif any(row):
            slack_rows.append((row, 1 - load))
    if not free:
        return ExtremalityCertificate(True, mode, [], tight, 0)
    _, pivots = rref(rows, len(free))
    rank = len(pivots)
    if rank == len(free):
        return ExtremalityCertificate(True, mode, free, tight, rank)
    d = null_vector(rows, len(free))
    scale = max(abs(x) for x in d)
    d = [x / scale for x in d]
    # q +- eps*d must stay in [0, 1] and below every slack clique row
    eps = min(min(m[v], 1 - m[v]) for v, x in zip(free, d) if x)
    for row, slack in slack_rows:
        s = abs(sum(a * x for a, x in zip(row, d)))
        if s:
            eps = min(eps, slack / s)
    direction = {v: x for v, x in zip(free, d) if x}
    return ExtremalityCertificate(False, mode, free, tight, rank, direction, eps)


def perturb(m: Mechanism, cert: ExtremalityCertificate, sign: int = 1) -> Mechanism:
    """q + sign*eps*d from a not-extreme certificate."""
    q = dict(m.q)
    for v, x in cert.direction.items():
        q[v] = q.get(v, ZERO) + sign * cert.epsilon * x
    return Mechanism(m.type_spaces, q, cert.mode)


# -- stochastic extreme family -------------------------------------------------------


def hole_cliques(g: FeasibilityGraph, hole: Sequence[VertexId]) -> list[tuple]:
    """Profiles of the maximal cliques through consecutive hole vertices."""
    k = len(hole)
    return [g.shared_profile(hole[a], hole[(a + 1) % k]) for a in range(k)]


def construct_hole_mechanism(g: FeasibilityGraph, hole: Sequence[VertexId], stable: Iterable[VertexId] = ()) -> Mechanism:
    """1/2 on H and on stable-set vertices near H but outside the cliques
    through consecutive hole pairs; 1 on stable-set vertices away from H."""
    hole = [g.check_vertex(v) for v in hole]
    stable = {g.check_vertex(v) for v in stable}
    if not is_odd_hole(g, hole):
        raise PeerMechError("H is not an odd hole")
    for v in stable:
        for w in stable:
            if g._adjacent(v, w):
                raise PeerMechError(f"S is not stable: {format_vertex(v)} ~ {format_vertex(w)}")
    v_h = set()
    for theta in hole_cliques(g, hole):
        v_h.update(g.clique_of_profile(theta))
    n_h = set()
    for v in hole:
        n_h.update(g.neighbors(v))
    q = {v: HALF for v in hole}
    for v in stable:
        if v in n_h and v not in v_h:
            q[v] = HALF
        elif v not in n_h:
            q[v] = ONE
    m = Mechanism(g.type_spaces, q, MAY)
    assert check_feasible(g, m), "hole mechanism must be feasible"
    return m


def greedy_stable_set(g: FeasibilityGraph, order: Iterable[VertexId], avoid: Iterable[VertexId] = ()) -> list[VertexId]:
    """Maximal stable set built greedily along ``order``, skipping ``avoid``."""
    blocked = set(avoid)
    out = []
    for v in order:
        if v in blocked:
            continue
        out.append(v)
        blocked.add(v)
        blocked.update(g.neighbors(v))
    return out


# -- vertex enumeration by double description ----------------------------------------


def _gcd_reduce(ray: list[int]) -> tuple:
    g = 0
    for x in ray:
        g = math.gcd(g, x)
    return tuple(x // g for x in ray) if g > 1 else tuple(ray)


def enumerate_extreme_points(g: FeasibilityGraph, mode: str = MAY, guard: int | None = None) -> list[Mechanism]:
    """All extreme points of the polytope, exactly.

    Double description on the homogenized cone ``{(x, t) : x >= 0, t >= 0,
    t - x(X) >= 0 (or = 0)}``, starting from the orthant's unit rays; the
    extreme points are the rays with ``t > 0`` scaled to ``t = 1``."""
    check_mode(mode)
    guard = enumeration_guard() if guard is None else guard
    d = len(g)
    if d > guard:
        raise GuardExceeded("enumeration variables", d, guard)
    dim = d + 1  # coordinates 0..d-1 are q, coordinate d is t
    # constraint k < dim is y_k >= 0; later ones are clique rows
    rays: list[tuple[tuple, int]] = []
    all_nonneg = (1 << dim) - 1
    for k in range(dim):
        r = [0] * dim
        r[k] = 1
        rays.append((tuple(r), all_nonneg & ~(1 << k)))
    cons = dim
    for theta in g.profiles():
        members = [g.index[VertexId(i, drop(theta, i))] for i in range(g.n)]
        bit = 1 << cons
        cons += 1

        def val(r):
            return r[d] - sum(r[k] for k in members)

        plus, zero, minus = [], [], []
        for r, z in rays:
            s = val(r)
            (plus if s > 0 else minus if s < 0 else zero).append((r, z, s))
        new = []
        if plus and minus:
            everything = rays
            for rp, zp, sp in plus:
                for rm, zm, sm in minus:
                    common = zp & zm
                    if bin(common).count("1") < dim - 2:
                        continue
                    if any((z & common) == common and r is not rp and r is not rm for r, z in everything):
                        continue
                    comb = [sp * b - sm * a for a, b in zip(rp, rm)]
                    new.append((_gcd_reduce(comb), common | bit))
        kept = [(r, z | bit) for r, z, _ in zero] + new
        if mode == MAY:
            kept += [(r, z) for r, z, _ in plus]
        rays = kept
    points = []
    for r, _ in rays:
        t = r[d]
        if t <= 0:
            continue
        q = {g.vertices[k]: Fraction(r[k], t) for k in range(d) if r[k]}
        points.append(Mechanism(g.type_spaces, q, mode))
    unique = {m.key(): m for m in points}
    return [unique[k] for k in sorted(unique)]


# -- odd-hole characterization -------------------------------------------------------


@dataclass
class ComponentReport:
    vertices: list
    hole: tuple | None

    def to_json(self) -> dict:
        return {
            "vertices": [format_vertex(v) for v in self.vertices],
            "hole": None if self.hole is None else [format_vertex(v) for v in self.hole],
        }


@dataclass
class HoleCharacterization:
    components: list
    extreme: bool
    half_integral: bool

    @property
    def all_have_holes(self) -> bool:
        return all(c.hole is not None for c in self.components)

    @property
    def consistent(self) -> bool:
        """Extreme and stochastic implies a hole in every stochastic component;
        for values in {0, 1/2, 1}, holes everywhere implies extreme."""
        if self.extreme and self.components and not self.all_have_holes:
            return False
        if self.half_integral and self.all_have_holes and not self.extreme:
            return False
        return True

    def to_json(self) -> dict:
        return {
            "extreme": self.extreme,
            "half_integral": self.half_integral,
            "all_components_have_holes": self.all_have_holes,
            "consistent": self.consistent,
            "components": [c.to_json() for c in self.components],
        }


def check_hole_characterization(g: FeasibilityGraph, m: Mechanism) -> HoleCharacterization:
    cert = is_extreme(g, m)
    comps = []
    for comp in components_of(g, m.stochastic_vertices()):
        hole = None
        if len(comp) >= 5:
            max_len = len(comp) if len(comp) % 2 else len(comp) - 1
            found = find_odd_holes(g, comp, max_len=max_len, first_only=True)
            hole = found[0] if found else None
        comps.append(ComponentReport(comp, hole))
    half = all(x in (HALF, ONE) for x in m.q.values())
    return HoleCharacterization(comps, cert.extreme, half)
