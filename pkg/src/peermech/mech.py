"""DIC mechanisms and their evaluation.

A DIC mechanism is stored as a probability per feasibility-graph vertex
``(i, theta_{-i})``, so agent i's own report cannot affect its allocation.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from peermech.env import Environment, WeightVector, parse_rational
from peermech.errors import PeerMechError
from peermech.fgraph import FeasibilityGraph, VertexId, drop, format_vertex, insert

MAY = "may-withhold"
MUST = "must-allocate"
MODES = (MAY, MUST)

ZERO = Fraction(0)
ONE = Fraction(1)


def check_mode(mode: str) -> str:
    if mode not in MODES:
        raise PeerMechError(f"unknown mode {mode!r}; expected one of {MODES}")
    return mode


@dataclass
class Mechanism:
    type_spaces: tuple
    q: dict = field(default_factory=dict)
    mode: str = MAY

    def __post_init__(self):
        self.type_spaces = tuple(tuple(ts) for ts in self.type_spaces)
        check_mode(self.mode)
        n = len(self.type_spaces)
        label_sets = [set(ts) for ts in self.type_spaces]
        clean = {}
        for v, x in self.q.items():
            x = parse_rational(x)
            if not ZERO <= x <= ONE:
                raise PeerMechError(f"probability {x} out of [0, 1] at {v!r}")
            v = VertexId(v[0], tuple(v[1]))
            if not 0 <= v.agent < n or len(v.theta_minus) != n - 1:
                raise PeerMechError(f"{v!r} is not a vertex for {n} agents")
            if any(t not in s for t, s in zip(v.theta_minus, drop(label_sets, v.agent))):
                raise PeerMechError(f"unknown type label in {v!r}")
            if x:
                clean[v] = x
        self.q = clean

    @property
    def n(self) -> int:
        return len(self.type_spaces)

    def __getitem__(self, v: VertexId) -> Fraction:
        return self.q.get(v, ZERO)

    def support(self) -> set:
        return set(self.q)

    def stochastic_vertices(self) -> set:
        return {v for v, x in self.q.items() if x < 1}

    def is_deterministic(self) -> bool:
        return all(x == 1 for x in self.q.values())

    def values(self) -> set:
        return set(self.q.values())

    def key(self) -> tuple:
        return tuple(sorted(((v.agent, tuple(map(str, v.theta_minus))), x) for v, x in self.q.items()))

    def __eq__(self, other):
        if not isinstance(other, Mechanism):
            return NotImplemented
        return self.type_spaces == other.type_spaces and self.q == other.q

    def __hash__(self):
        return hash((self.type_spaces, frozenset(self.q.items())))

    def to_json(self) -> dict:
        entries = sorted(self.q.items(), key=lambda kv: (kv[0].agent, tuple(map(str, kv[0].theta_minus))))
        return {
            "mode": self.mode,
            "type_spaces": [list(ts) for ts in self.type_spaces],
            "entries": [{"agent": v.agent, "theta_minus": list(v.theta_minus), "q": str(x)} for v, x in entries],
        }


def mechanism_from_json(data: Mapping, type_spaces: Sequence[Sequence] | None = None) -> Mechanism:
    from peermech.env import _label

    if type_spaces is None:
        if "type_spaces" not in data:
            raise PeerMechError("mechanism file lacks type_spaces; supply them from the environment")
        type_spaces = [[_label(t) for t in ts] for ts in data["type_spaces"]]
    try:
        q = {}
        for row in data["entries"]:
            v = VertexId(int(row["agent"]), tuple(_label(t) for t in row["theta_minus"]))
            q[v] = parse_rational(row["q"])
        mode = data.get("mode", MAY)
    except (KeyError, TypeError) as exc:
        raise PeerMechError(f"parse failure: {exc}") from exc
    return Mechanism(type_spaces, q, mode)


def load_mechanism(source, type_spaces=None) -> Mechanism:
    from peermech.env import _read_json

    return mechanism_from_json(_read_json(source), type_spaces)


@dataclass
class FeasibilityResult:
    ok: bool
    violated_profile: tuple | None = None
    violated_clique: tuple | None = None
    load: Fraction | None = None

    def __bool__(self):
        return self.ok


def check_feasible(g: FeasibilityGraph, m: Mechanism) -> FeasibilityResult:
    """Check every clique constraint (``<= 1``, or ``== 1`` when allocation is mandatory)."""
    if g.type_spaces != m.type_spaces:
        raise PeerMechError("mechanism and graph have different type spaces")
    for v in m.q:
        if v not in g.index:
            raise PeerMechError(f"mechanism has an entry for invalid vertex {v!r}")
    n = g.n
    for theta in g.profiles():
        clique = tuple(VertexId(i, drop(theta, i)) for i in range(n))
        load = sum((m.q.get(v, ZERO) for v in clique), ZERO)
        bad = load > 1 if m.mode == MAY else load != 1
        if bad:
            return FeasibilityResult(False, theta, clique, load)
    return FeasibilityResult(True)


def utility_from_weights(w: WeightVector, m: Mechanism) -> Fraction:
    if w.type_spaces != m.type_spaces:
        raise PeerMechError("weights and mechanism have different type spaces")
    return sum((x * m.q.get(v, ZERO) for v, x in w.values.items()), ZERO)


def utility(env: Environment | WeightVector, m: Mechanism) -> Fraction:
    """Principal's expected utility, computed from vertex weights and, for an
    environment, also as the double sum over support profiles and agents."""
    if isinstance(env, WeightVector):
        return utility_from_weights(env, m)
    if env.type_spaces != m.type_spaces:
        raise PeerMechError("environment and mechanism have different type spaces (shape mismatch)")
    by_weights = utility_from_weights(env.weights(), m)
    by_profiles = ZERO
    for e in env.support:
        for i in range(env.n):
            v = VertexId(i, drop(e.theta, i))
            x = m.q.get(v)
            if x:
                by_profiles += e.prob * x * env.peer_value_at(v)
    assert by_weights == by_profiles, (by_weights, by_profiles)
    return by_weights


# -- ranks ---------------------------------------------------------------------


class RankContext:
    """Peer-value vectors and ranks with per-profile caching."""

    def __init__(self, env: Environment):
        self.env = env
        self.n = env.n
        self._pv: dict[tuple, tuple] = {}
        self._ranks: dict[tuple, tuple] = {}

    def peer_values(self, theta: tuple) -> tuple:
        pv = self._pv.get(theta)
        if pv is None:
            env = self.env
            pv = tuple(env.peer_value_at(VertexId(i, drop(theta, i))) for i in range(self.n))
            self._pv[theta] = pv
        return pv

    def ranks(self, theta: tuple) -> tuple:
        r = self._ranks.get(theta)
        if r is None:
            pv = self.peer_values(theta)
            n = self.n
            r = tuple(
                Fraction(sum(1 for j in range(n) if pv[j] > pv[i] or (pv[j] == pv[i] and j <= i)), n)
                for i in range(n)
            )
            self._ranks[theta] = r
        return r

    def rank(self, i: int, theta: tuple) -> Fraction:
        return self.ranks(theta)[i]

    def robust_rank(self, i: int, theta_minus: tuple) -> Fraction:
        return max(self.rank(i, insert(theta_minus, i, t)) for t in self.env.type_spaces[i])

    def informational_size(self, theta: tuple) -> Fraction:
        best = ZERO
        for i in range(self.n):
            base = self.rank(i, theta)
            theta_minus = drop(theta, i)
            for t in self.env.type_spaces[i]:
                d = abs(base - self.rank(i, insert(theta_minus, i, t)))
                if d > best:
                    best = d
        return best


@dataclass
class RankRow:
    theta: tuple
    prob: Fraction
    peer_values: tuple
    ranks: tuple
    robust_ranks: tuple
    delta: Fraction


@dataclass
class RankTable:
    n: int
    rows: list

    def by_profile(self) -> dict:
        return {r.theta: r for r in self.rows}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["theta", "agent", "peer_value", "rank", "robust_rank", "delta"])
        for r in self.rows:
            label = "(" + ",".join(str(t) for t in r.theta) + ")"
            for i in range(self.n):
                writer.writerow([label, i, r.peer_values[i], r.ranks[i], r.robust_ranks[i], r.delta])
        return buf.getvalue()


def rank_table(env: Environment, ctx: RankContext | None = None) -> RankTable:
    ctx = ctx or RankContext(env)
    rows = []
    for e in env.support:
        theta = e.theta
        rows.append(
            RankRow(
                theta,
                e.prob,
                ctx.peer_values(theta),
                ctx.ranks(theta),
                tuple(ctx.robust_rank(i, drop(theta, i)) for i in range(env.n)),
                ctx.informational_size(theta),
            )
        )
    return RankTable(env.n, rows)


def _check_threshold(p) -> Fraction:
    p = parse_rational(p)
    if not ZERO < p < ONE:
        raise PeerMechError(f"threshold {p} must lie in (0, 1)")
    return p


def ranking_mechanism(env: Environment, p, ctx: RankContext | None = None) -> Mechanism:
    """Allocate 1/(pn) to every agent whose robust rank is at most p and whose
    peer value is nonnegative."""
    p = _check_threshold(p)
    ctx = ctx or RankContext(env)
    n = env.n
    share = 1 / (p * n)
    q = {}
    for i in range(n):
        others = [env.type_spaces[j] for j in range(n) if j != i]
        for theta_minus in itertools.product(*others):
            v = VertexId(i, theta_minus)
            if env.peer_value_at(v) >= 0 and ctx.robust_rank(i, theta_minus) <= p:
                q[v] = share
    return Mechanism(env.type_spaces, q, MAY)


def ranking_utility(env: Environment, p, ctx: RankContext | None = None) -> Fraction:
    """Utility of the ranking mechanism, evaluated only where weights are nonzero."""
    p = _check_threshold(p)
    ctx = ctx or RankContext(env)
    share = 1 / (p * env.n)
    total = ZERO
    for v, w in env.weights().values.items():
        if w > 0 and ctx.robust_rank(v.agent, v.theta_minus) <= p:
            total += w * share
    return total


@dataclass
class InformationalSizeProfile:
    delta: dict  # theta -> delta(theta)
    prob: dict  # theta -> mu(theta)

    @property
    def max(self) -> Fraction:
        return max(self.delta.values(), default=ZERO)

    def mass_above(self, d) -> Fraction:
        """mu{theta : delta(theta) > d}."""
        d = parse_rational(d)
        return sum((self.prob[t] for t, x in self.delta.items() if x > d), ZERO)

    def tail(self) -> list[tuple[Fraction, Fraction]]:
        """(d, mu{delta > d}) at every distinct delta value and at 0."""
        levels = sorted(set(self.delta.values()) | {ZERO})
        return [(d, self.mass_above(d)) for d in levels]

    def cdf(self) -> list[tuple[Fraction, Fraction]]:
        """(d, mu{delta <= d}) at every distinct delta value."""
        levels = sorted(set(self.delta.values()))
        return [(d, 1 - self.mass_above(d)) for d in levels]


def informational_size_profile(env: Environment, ctx: RankContext | None = None) -> InformationalSizeProfile:
    ctx = ctx or RankContext(env)
    delta = {e.theta: ctx.informational_size(e.theta) for e in env.support}
    return InformationalSizeProfile(delta, {e.theta: e.prob for e in env.support})


# -- jury mechanisms -----------------------------------------------------------------


def _jury_choices(env: Environment, jurors: tuple, mode: str) -> dict:
    """theta_J -> chosen candidate (or None to withhold) on the juror marginal support."""
    candidates = [c for c in range(env.n) if c not in jurors]
    choices = {}
    for key, (mass, sums) in env.juror_table(jurors).items():
        if not candidates:
            choices[key] = None
            continue
        # sums are mass-scaled conditional values; mass > 0 preserves the order
        best = max(candidates, key=lambda c: (sums[c], -c))
        choices[key] = None if mode == MAY and sums[best] < 0 else best
    return choices


def _normalize_jurors(env: Environment, jurors: Iterable[int], mode: str) -> tuple:
    jurors = tuple(sorted(set(jurors)))
    if any(not 0 <= j < env.n for j in jurors):
        raise PeerMechError(f"invalid juror set {jurors}")
    if check_mode(mode) == MUST and len(jurors) == env.n:
        raise PeerMechError("must-allocate jury needs at least one candidate")
    return jurors


def jury_value(env: Environment, jurors: Iterable[int], mode: str = MAY) -> Fraction:
    """Utility of :func:`jury_mechanism_for` without building the mechanism."""
    jurors = _normalize_jurors(env, jurors, mode)
    candidates = [c for c in range(env.n) if c not in jurors]
    if not candidates:
        return ZERO
    total = ZERO
    for mass, sums in env.juror_table(jurors).values():
        best = max(sums[c] for c in candidates)
        total += max(best, ZERO) if mode == MAY else best
    return total


def jury_mechanism_for(env: Environment, jurors: Iterable[int], mode: str = MAY) -> Mechanism:
    """Deterministic jury mechanism: jurors' reports pick the candidate with the
    highest conditional value (smallest index on ties)."""
    jurors = _normalize_jurors(env, jurors, mode)
    candidates = [c for c in range(env.n) if c not in jurors]
    choices = _jury_choices(env, jurors, mode)
    default = candidates[0] if (mode == MUST and candidates) else None
    return jury_mechanism_from_rule(env.type_spaces, jurors, lambda key: choices.get(key, default), mode)


def jury_mechanism_from_rule(type_spaces: Sequence[Sequence], jurors: Sequence[int], rule, mode: str = MAY) -> Mechanism:
    """Jury mechanism allocating to ``rule(theta_J)`` (a candidate, or None to withhold)."""
    n = len(type_spaces)
    jurors = tuple(jurors)
    q = {}
    cache: dict = {}
    for c in range(n):
        if c in jurors:
            continue
        others = [j for j in range(n) if j != c]
        pos = [others.index(j) for j in jurors]
        for theta_minus in itertools.product(*(type_spaces[j] for j in others)):
            key = tuple(theta_minus[k] for k in pos)
            if key not in cache:
                cache[key] = rule(key)
            if cache[key] == c:
                q[VertexId(c, theta_minus)] = ONE
    return Mechanism(type_spaces, q, mode)


def is_jury(m: Mechanism) -> tuple[bool, tuple | None]:
    """Whether ``m`` is a jury mechanism; the witness puts never-winning agents in J."""
    n = m.n
    per_agent = defaultdict(dict)
    for v, x in m.q.items():
        per_agent[v.agent][v.theta_minus] = x
    winners = sorted(per_agent)
    for i in winners:
        # q must not depend on candidate i's report anywhere
        for j in winners:
            if j == i:
                continue
            pos = i if i < j else i - 1
            groups: dict = {}
            others = [m.type_spaces[k] for k in range(n) if k != j]
            for theta_minus in itertools.product(*others):
                key = theta_minus[:pos] + theta_minus[pos + 1 :]
                x = per_agent[j].get(theta_minus, ZERO)
                if groups.setdefault(key, x) != x:
                    return False, None
    jurors = tuple(i for i in range(n) if i not in per_agent)
    return True, jurors


def constant_mechanism(type_spaces: Sequence[Sequence], agent: int | None, mode: str = MAY) -> Mechanism:
    """Always allocate to ``agent`` (or never, when ``agent`` is None)."""
    q = {}
    if agent is not None:
        others = [type_spaces[j] for j in range(len(type_spaces)) if j != agent]
        q = {VertexId(agent, t): ONE for t in itertools.product(*others)}
    return Mechanism(type_spaces, q, mode)


def dump_mechanism(m: Mechanism) -> str:
    return json.dumps(m.to_json(), indent=2, sort_keys=True)


def describe(m: Mechanism) -> list[str]:
    return [f"{format_vertex(v)} = {x}" for v, x in sorted(m.q.items(), key=lambda kv: (kv[0].agent, str(kv[0].theta_minus)))]
