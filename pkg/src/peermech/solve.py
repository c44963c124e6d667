"""Exact optimizers over DIC mechanisms.

* ``solve_lp``: optimal stochastic mechanism (LP over the clique polytope).
* ``solve_deterministic``: optimal deterministic mechanism (maximum-weight stable set).
* ``solve_jury``: best jury mechanism over all juror sets.
* ``upper_bound``: allocate to the agent with the highest peer value.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from peermech.env import Environment, WeightVector
from peermech.errors import BB_NODE_GUARD, JURY_AGENT_GUARD, LP_VARIABLE_GUARD, GuardExceeded, PeerMechError
from peermech.fgraph import FeasibilityGraph, VertexId, build_graph, drop
from peermech.mech import (
    MAY,
    MUST,
    Mechanism,
    RankContext,
    check_mode,
    jury_mechanism_for,
    jury_value,
    ranking_utility,
    utility,
)
from peermech.simplex import OPTIMAL, maximize

ZERO = Fraction(0)
ONE = Fraction(1)

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_GUARD = "guard-exceeded"


@dataclass
class SolveReport:
    mechanism: Mechanism | None
    objective: Fraction | None
    status: str
    mode: str
    stats: dict = field(default_factory=dict)
    unique: bool | None = None
    jurors: tuple | None = None

    @property
    def optimal(self) -> bool:
        return self.status == STATUS_OPTIMAL

    def to_json(self, with_time: bool = False) -> dict:
        out = {
            "status": self.status,
            "mode": self.mode,
            "objective": None if self.objective is None else str(self.objective),
            "stats": {k: v for k, v in self.stats.items() if with_time or k != "seconds"},
        }
        if self.unique is not None:
            out["unique"] = self.unique
        if self.jurors is not None:
            out["jurors"] = list(self.jurors)
        if self.mechanism is not None:
            out["mechanism"] = self.mechanism.to_json()
        return out


def _split(instance) -> tuple[Environment | None, WeightVector]:
    if isinstance(instance, Environment):
        return instance, instance.weights()
    if isinstance(instance, WeightVector):
        return None, instance
    raise PeerMechError(f"expected an Environment or WeightVector, got {type(instance).__name__}")


def _graph_for(w: WeightVector) -> FeasibilityGraph:
    return build_graph(w.type_spaces, min_types=1)


# -- LP ------------------------------------------------------------------------------


def _lp_system(g: FeasibilityGraph, w: WeightVector, mode: str, variables: Sequence[VertexId]):
    col = {v: k for k, v in enumerate(variables)}
    c = [w[v] for v in variables]
    rows = []
    for theta in g.profiles():
        row = {}
        for i in range(g.n):
            k = col.get(VertexId(i, drop(theta, i)))
            if k is not None:
                row[k] = ONE
        if row:
            rows.append(row)
    return c, rows


def _lp(g, w, mode, variables, objective=None, extra_eq=None):
    c, rows = _lp_system(g, w, mode, variables)
    if objective is not None:
        c = objective
    rhs = [ONE] * len(rows)
    eq_rows, eq_rhs = [], []
    if extra_eq is not None:
        eq_rows.append(extra_eq[0])
        eq_rhs.append(extra_eq[1])
    if mode == MUST:
        return maximize(c, eq_rows=rows + eq_rows, eq_rhs=rhs + eq_rhs)
    return maximize(c, le_rows=rows, le_rhs=rhs, eq_rows=eq_rows, eq_rhs=eq_rhs)


def optimum_is_unique(g: FeasibilityGraph, w: WeightVector, mode: str, q: Mechanism, value: Fraction) -> bool:
    """Re-solve max and min of every coordinate over the optimal face."""
    variables = list(g.vertices)
    c, _ = _lp_system(g, w, mode, variables)
    face = ({k: x for k, x in enumerate(c) if x}, value)
    for k, v in enumerate(variables):
        for sign in (ONE, -ONE):
            obj = [ZERO] * len(variables)
            obj[k] = sign
            res = _lp(g, w, mode, variables, objective=obj, extra_eq=face)
            if not res.optimal or sign * res.objective != q[v]:
                return False
    return True


def solve_lp(
    instance,
    mode: str = MAY,
    guard: int = LP_VARIABLE_GUARD,
    check_unique: bool = False,
    presolve: bool = True,
) -> SolveReport:
    """Optimal stochastic DIC mechanism by exact simplex.

    In may-withhold mode vertices of nonpositive weight are fixed at 0 before
    solving; the optimum found is a vertex of that face and hence of the full
    polytope."""
    check_mode(mode)
    env, w = _split(instance)
    start = time.perf_counter()
    g = _graph_for(w)
    if mode == MAY and presolve:
        variables = [v for v in g.vertices if w[v] > 0]
    else:
        variables = list(g.vertices)
    stats = {"variables": len(variables), "graph_vertices": len(g)}
    if len(variables) > guard:
        return SolveReport(None, None, STATUS_GUARD, mode, {**stats, "guard": guard})
    res = _lp(g, w, mode, variables)
    stats["pivots"] = res.pivots
    if res.status != OPTIMAL:
        # the constant 1/n mechanism is always feasible, so this indicates a bug
        raise PeerMechError(f"LP solver returned {res.status}")
    q = {v: x for v, x in zip(variables, res.x) if x}
    m = Mechanism(w.type_spaces, q, mode)
    value = utility(env if env is not None else w, m)
    assert value == res.objective, (value, res.objective)
    unique = None
    if check_unique:
        full = res if len(variables) == len(g) else _lp(g, w, mode, list(g.vertices))
        if full.strictly_unique and full.objective == value:
            unique = True
        else:
            unique = optimum_is_unique(g, w, mode, m, value)
    stats["seconds"] = time.perf_counter() - start
    return SolveReport(m, value, STATUS_OPTIMAL, mode, stats, unique)


def lp_bound(g: FeasibilityGraph, weights: dict, vertices: Iterable[VertexId]) -> Fraction:
    """LP relaxation value restricted to ``vertices`` (may-withhold rows)."""
    variables = [v for v in vertices if weights.get(v, ZERO) > 0]
    if not variables:
        return ZERO
    col = {v: k for k, v in enumerate(variables)}
    rows = {}
    for v in variables:
        for t in g.type_spaces[v.agent]:
            theta = tuple(v.theta_minus[: v.agent]) + (t,) + tuple(v.theta_minus[v.agent :])
            rows.setdefault(theta, {})[col[v]] = ONE
    rows = [r for r in rows.values() if len(r) > 1]
    # single-vertex cliques still need x <= 1
    rows += [{k: ONE} for k in range(len(variables))]
    res = maximize([weights[v] for v in variables], le_rows=rows, le_rhs=[ONE] * len(rows))
    return res.objective


# -- branch and bound ----------------------------------------------------------------


class _Counter:
    def __init__(self, guard: int):
        self.nodes = 0
        self.guard = guard

    def tick(self):
        self.nodes += 1
        if self.nodes > self.guard:
            raise GuardExceeded("branch-and-bound nodes", self.nodes, self.guard)


def _mwss_may(g: FeasibilityGraph, w: WeightVector, counter: _Counter, lp_threshold: int | None):
    verts = sorted((v for v in g.vertices if w[v] > 0), key=lambda v: (-w[v], g.sort_key(v)))
    k = len(verts)
    idx = {v: a for a, v in enumerate(verts)}
    wt = [w[v] for v in verts]
    closed = []
    for a, v in enumerate(verts):
        m = 1 << a
        for u in g.neighbors(v):
            b = idx.get(u)
            if b is not None:
                m |= 1 << b
        closed.append(m)
    best = [ZERO, 0]
    weights = {v: w[v] for v in verts}

    def mask_sum(mask):
        s = ZERO
        while mask:
            low = mask & -mask
            s += wt[low.bit_length() - 1]
            mask ^= low
        return s

    def rec(cur, chosen, remaining):
        counter.tick()
        if not remaining:
            if cur > best[0]:
                best[0], best[1] = cur, chosen
            return
        if cur + mask_sum(remaining) <= best[0]:
            return
        if lp_threshold is not None and counter.nodes > lp_threshold:
            rest = [verts[b] for b in range(k) if remaining >> b & 1]
            if cur + lp_bound(g, weights, rest) <= best[0]:
                return
        low = remaining & -remaining
        a = low.bit_length() - 1
        rec(cur + wt[a], chosen | low, remaining & ~closed[a])
        rec(cur, chosen, remaining & ~low)

    rec(ZERO, 0, (1 << k) - 1)
    chosen = [verts[b] for b in range(k) if best[1] >> b & 1]
    return best[0], chosen


def _mwss_must(g: FeasibilityGraph, w: WeightVector, counter: _Counter):
    verts = list(g.vertices)
    idx = {v: a for a, v in enumerate(verts)}
    wt = [w[v] for v in verts]
    profiles = list(g.profiles())
    pidx = {t: a for a, t in enumerate(profiles)}
    clique_verts = []
    for theta in profiles:
        m = 0
        for i in range(g.n):
            m |= 1 << idx[VertexId(i, drop(theta, i))]
        clique_verts.append(m)
    vert_cliques = []
    closed = []
    for a, v in enumerate(verts):
        cm = 0
        for t in g.type_spaces[v.agent]:
            theta = tuple(v.theta_minus[: v.agent]) + (t,) + tuple(v.theta_minus[v.agent :])
            cm |= 1 << pidx[theta]
        vert_cliques.append(cm)
        m = 1 << a
        for u in g.neighbors(v):
            m |= 1 << idx[u]
        closed.append(m)
    best = [None, 0]

    def bits(mask):
        while mask:
            low = mask & -mask
            yield low.bit_length() - 1
            mask ^= low

    def rec(cur, chosen, avail, uncovered):
        counter.tick()
        if not uncovered:
            if best[0] is None or cur > best[0]:
                best[0], best[1] = cur, chosen
            return
        bound = cur
        pick, pick_count = None, None
        for x in bits(uncovered):
            cands = clique_verts[x] & avail
            if not cands:
                return
            cnt = bin(cands).count("1")
            top = max(wt[b] for b in bits(cands))
            if top > 0:
                bound += top
            if pick is None or cnt < pick_count:
                pick, pick_count = x, cnt
        if best[0] is not None and bound <= best[0]:
            return
        cands = sorted(bits(clique_verts[pick] & avail), key=lambda b: -wt[b])
        for b in cands:
            rec(cur + wt[b], chosen | (1 << b), avail & ~closed[b], uncovered & ~vert_cliques[b])

    rec(ZERO, 0, (1 << len(verts)) - 1, (1 << len(profiles)) - 1)
    if best[0] is None:
        raise PeerMechError("no stable set meets every clique exactly once")
    return best[0], [verts[b] for b in bits(best[1])]


def solve_deterministic(
    instance,
    mode: str = MAY,
    node_guard: int = BB_NODE_GUARD,
    lp_threshold: int | None = None,
) -> SolveReport:
    """Optimal deterministic DIC mechanism by branch and bound.

    ``lp_threshold`` switches on the LP relaxation bound once that many
    nodes have been explored (may-withhold only)."""
    check_mode(mode)
    env, w = _split(instance)
    start = time.perf_counter()
    g = _graph_for(w)
    counter = _Counter(node_guard)
    try:
        if mode == MAY:
            value, chosen = _mwss_may(g, w, counter, lp_threshold)
        else:
            value, chosen = _mwss_must(g, w, counter)
    except GuardExceeded:
        return SolveReport(None, None, STATUS_GUARD, mode, {"nodes": counter.nodes, "guard": node_guard})
    m = Mechanism(w.type_spaces, {v: ONE for v in chosen}, mode)
    got = utility(env if env is not None else w, m)
    assert got == value, (got, value)
    stats = {"nodes": counter.nodes, "seconds": time.perf_counter() - start}
    return SolveReport(m, value, STATUS_OPTIMAL, mode, stats)


# -- jury ----------------------------------------------------------------------------


def juror_sets(n: int, mode: str, sizes: Iterable[int] | None = None):
    allowed = range(n + 1) if sizes is None else sorted(set(sizes))
    for k in allowed:
        if mode == MUST and k == n:
            continue
        yield from itertools.combinations(range(n), k)


def solve_jury(
    env: Environment,
    mode: str = MAY,
    guard: int = JURY_AGENT_GUARD,
    sizes: Iterable[int] | None = None,
) -> SolveReport:
    """Best jury mechanism over all juror sets (or over juror sets of the given sizes)."""
    check_mode(mode)
    if not isinstance(env, Environment):
        raise PeerMechError("jury optimization needs an environment, not bare weights")
    if sizes is None and env.n > guard:
        return SolveReport(None, None, STATUS_GUARD, mode, {"agents": env.n, "guard": guard})
    start = time.perf_counter()
    best, best_j, count = None, None, 0
    for jurors in juror_sets(env.n, mode, sizes):
        count += 1
        value = jury_value(env, jurors, mode)
        if best is None or value > best:
            best, best_j = value, jurors
    if best_j is None:
        raise PeerMechError("no admissible juror set")
    m = jury_mechanism_for(env, best_j, mode)
    got = utility(env, m)
    assert got == best, (got, best)
    stats = {"juror_sets": count, "seconds": time.perf_counter() - start}
    return SolveReport(m, best, STATUS_OPTIMAL, mode, stats, jurors=best_j)


# -- bounds --------------------------------------------------------------------------


def upper_bound(env: Environment, mode: str = MAY) -> Fraction:
    """Value of always allocating to an agent with the highest peer value
    (only when it is positive, in may-withhold mode)."""
    check_mode(mode)
    total = ZERO
    for e in env.support:
        top = max(env.peer_value_at(VertexId(i, drop(e.theta, i))) for i in range(env.n))
        total += e.prob * (max(top, ZERO) if mode == MAY else top)
    return total


def ranking_lower_bound(env: Environment, p, ctx: RankContext | None = None) -> Fraction:
    """Analytic lower bound on the ranking mechanism's utility:
    sum mu*max(0, u(p,theta)) - (1 - sum mu*floor(n(p - delta))/(np)),
    where u(p,theta) is the lowest peer value among agents ranked at most p
    (0 when there are none) and the floor is clamped at 0."""
    from peermech.env import parse_rational

    p = parse_rational(p)
    ctx = ctx or RankContext(env)
    n = env.n
    first = ZERO
    share = ZERO
    for e in env.support:
        pv = ctx.peer_values(e.theta)
        ranks = ctx.ranks(e.theta)
        low = [pv[i] for i in range(n) if ranks[i] <= p]
        first += e.prob * max(ZERO, min(low) if low else ZERO)
        count = min(max(math.floor(n * (p - ctx.informational_size(e.theta))), 0), n)
        share += e.prob * Fraction(count) / (n * p)
    return first - (1 - share)


@dataclass
class GapRow:
    p: Fraction
    ranking_utility: Fraction
    lp_value: Fraction | None
    jury_value: Fraction | None
    upper_bound: Fraction

    @property
    def gap_to_upper(self) -> Fraction:
        return self.upper_bound - self.ranking_utility

    @property
    def gap_to_lp(self) -> Fraction | None:
        return None if self.lp_value is None else self.lp_value - self.ranking_utility

    def to_json(self) -> dict:
        s = lambda x: None if x is None else str(x)
        return {
            "p": str(self.p),
            "ranking_utility": str(self.ranking_utility),
            "lp_value": s(self.lp_value),
            "jury_value": s(self.jury_value),
            "upper_bound": str(self.upper_bound),
            "gap_to_upper": str(self.gap_to_upper),
            "gap_to_lp": s(self.gap_to_lp),
        }


def optimality_gap_report(
    env: Environment,
    p_grid: Sequence,
    with_lp: bool = True,
    with_jury: bool = True,
    lp_guard: int = LP_VARIABLE_GUARD,
) -> list[GapRow]:
    """Ranking utility per threshold against the LP optimum, best jury and upper bound."""
    ctx = RankContext(env)
    lp_value = jury = None
    if with_lp:
        rep = solve_lp(env, MAY, guard=lp_guard)
        if rep.status == STATUS_GUARD:
            raise GuardExceeded("LP variables", rep.stats["variables"], lp_guard)
        lp_value = rep.objective
    if with_jury:
        rep = solve_jury(env, MAY)
        if rep.status == STATUS_GUARD:
            raise GuardExceeded("jury agents", env.n, JURY_AGENT_GUARD)
        jury = rep.objective
    ub = upper_bound(env, MAY)
    return [GapRow(Fraction(p), ranking_utility(env, p, ctx), lp_value, jury, ub) for p in p_grid]
