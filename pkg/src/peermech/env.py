"""Finite environments: type spaces, a joint distribution over type profiles and
conditional expected values, plus everything derived from them (peer values,
vertex weights, conditional values given a juror profile).
"""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from peermech.errors import InvalidEnvironment, PeerMechError
from peermech.fgraph import VertexId, drop

ZERO = Fraction(0)
ONE = Fraction(1)


def parse_rational(value: Any) -> Fraction:
    """Parse ``"p/q"``, a decimal string or a JSON number into an exact fraction.

    Decimal text is read as the exact decimal it denotes, so ``"0.1"`` is 1/10.
    """
    if isinstance(value, bool):
        raise PeerMechError(f"not a number: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # json.loads is called with parse_float=str, so floats only arrive from Python callers
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise PeerMechError(f"cannot parse rational {value!r}") from exc
    raise PeerMechError(f"cannot parse rational {value!r}")


def _label(value: Any) -> Any:
    if isinstance(value, list):
        return tuple(_label(v) for v in value)
    return value


@dataclass(frozen=True)
class SupportEntry:
    theta: tuple
    prob: Fraction
    cond_values: tuple  # cond_values[i] = E[u_i | theta]


@dataclass(frozen=True)
class Environment:
    n: int
    type_spaces: tuple
    support: tuple = field(repr=False)
    # explicit peer values at vertices of zero marginal mass; absent means 0
    off_support: Mapping = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "type_spaces", tuple(tuple(ts) for ts in self.type_spaces))
        object.__setattr__(
            self, "off_support", {VertexId(v[0], tuple(v[1])): parse_rational(x) for v, x in dict(self.off_support).items()}
        )
        object.__setattr__(
            self,
            "support",
            tuple(
                SupportEntry(tuple(e.theta), parse_rational(e.prob), tuple(parse_rational(x) for x in e.cond_values))
                for e in self.support
            ),
        )

    @classmethod
    def from_table(cls, type_spaces: Sequence[Sequence], rows: Iterable[tuple]) -> "Environment":
        """Build from ``(theta, prob, cond_values)`` triples and validate."""
        support = tuple(SupportEntry(tuple(t), parse_rational(p), tuple(v)) for t, p, v in rows)
        env = cls(len(type_spaces), tuple(tuple(ts) for ts in type_spaces), support)
        env.ensure_valid()
        return env

    def ensure_valid(self) -> "Environment":
        problems = validate(self)
        if problems:
            raise InvalidEnvironment(problems)
        return self

    # -- derived quantities -------------------------------------------------

    @cached_property
    def _vertex_sums(self) -> tuple[dict, dict]:
        mass: dict[VertexId, Fraction] = defaultdict(Fraction)
        value_mass: dict[VertexId, Fraction] = defaultdict(Fraction)
        for e in self.support:
            for i in range(self.n):
                v = VertexId(i, drop(e.theta, i))
                mass[v] += e.prob
                value_mass[v] += e.prob * e.cond_values[i]
        return dict(mass), dict(value_mass)

    @cached_property
    def profile_prob(self) -> dict:
        return {e.theta: e.prob for e in self.support}

    def marginal(self, i: int, theta_minus_i: Sequence) -> Fraction:
        """mu(theta_{-i})."""
        return self._vertex_sums[0].get(VertexId(i, tuple(theta_minus_i)), ZERO)

    def peer_value(self, i: int, theta_minus_i: Sequence) -> Fraction:
        """E[u_i | theta_{-i}]. When theta_{-i} has probability zero this is
        the ``off_support`` entry if one is given, else 0."""
        theta_minus_i = tuple(theta_minus_i)
        self._check_partial(i, theta_minus_i)
        return self.peer_value_at(VertexId(i, theta_minus_i))

    def peer_value_at(self, v: VertexId) -> Fraction:
        # unchecked fast path used by rank computations
        mass = self._vertex_sums[0].get(v)
        if not mass:
            return self.off_support.get(v, ZERO)
        return self._vertex_sums[1][v] / mass

    def weights(self) -> "WeightVector":
        """Vertex weights mu(theta_{-i}) * peer value, zero off the marginal support."""
        values = {v: w for v, w in self._vertex_sums[1].items() if w != 0}
        return WeightVector(self.type_spaces, values)

    def conditional_value(self, c: int, jurors: Sequence[int], theta_j: Sequence) -> Fraction:
        """E[u_c | theta_J] for a juror set J not containing c (0 if mu(theta_J) = 0)."""
        jurors = tuple(jurors)
        theta_j = tuple(theta_j)
        if c in jurors:
            raise PeerMechError(f"agent {c} is in the juror set")
        if len(jurors) != len(theta_j):
            raise PeerMechError("juror profile length does not match juror set")
        mass = ZERO
        total = ZERO
        for e in self.support:
            if all(e.theta[j] == t for j, t in zip(jurors, theta_j)):
                mass += e.prob
                total += e.prob * e.cond_values[c]
        return total / mass if mass else ZERO

    def juror_table(self, jurors: Sequence[int]) -> dict:
        """theta_J -> (mu(theta_J), [mu(theta_J) * E[u_c | theta_J] for every agent c])."""
        jurors = tuple(jurors)
        table: dict = {}
        for e in self.support:
            key = tuple(e.theta[j] for j in jurors)
            if key not in table:
                table[key] = [ZERO, [ZERO] * self.n]
            row = table[key]
            row[0] += e.prob
            sums = row[1]
            for c in range(self.n):
                sums[c] += e.prob * e.cond_values[c]
        return {k: (m, s) for k, (m, s) in table.items()}

    def expected_value(self, i: int) -> Fraction:
        return sum((e.prob * e.cond_values[i] for e in self.support), ZERO)

    def _check_partial(self, i: int, theta_minus_i: tuple) -> None:
        if not 0 <= i < self.n:
            raise PeerMechError(f"unknown agent {i}")
        others = [j for j in range(self.n) if j != i]
        if len(theta_minus_i) != len(others):
            raise PeerMechError(f"partial profile {theta_minus_i!r} has wrong length")
        for j, t in zip(others, theta_minus_i):
            if t not in self.type_spaces[j]:
                raise PeerMechError(f"unknown type {t!r} for agent {j}")

    def to_json(self) -> dict:
        out = {
            "agents": self.n,
            "type_spaces": [list(ts) for ts in self.type_spaces],
            "support": [
                {"theta": list(e.theta), "prob": str(e.prob), "values": [str(x) for x in e.cond_values]}
                for e in self.support
            ],
        }
        if self.off_support:
            out["off_support"] = [
                {"agent": v.agent, "theta_minus": list(v.theta_minus), "value": str(x)}
                for v, x in sorted(self.off_support.items(), key=lambda kv: _sort_key(kv[0]))
            ]
        return out


def validate(env: Environment) -> list[str]:
    """Return every violated environment invariant (empty when valid)."""
    problems: list[str] = []
    if env.n < 2:
        problems.append("n < 2")
    if len(env.type_spaces) != env.n:
        problems.append(f"expected {env.n} type spaces, got {len(env.type_spaces)}")
    for i, ts in enumerate(env.type_spaces):
        if len(ts) < 2:
            problems.append(f"type space too small for agent {i}")
        if len(set(ts)) != len(ts):
            problems.append(f"duplicate type label for agent {i}")
    seen: set = set()
    total = ZERO
    for e in env.support:
        if e.theta in seen:
            problems.append(f"duplicate profile {e.theta!r}")
        seen.add(e.theta)
        total += e.prob
        if not ZERO < e.prob <= ONE:
            problems.append(f"probability {e.prob} out of (0, 1] at {e.theta!r}")
        if len(e.theta) != env.n or len(e.cond_values) != env.n:
            problems.append(f"profile {e.theta!r} has wrong length")
            continue
        for i, t in enumerate(e.theta):
            if i < len(env.type_spaces) and t not in env.type_spaces[i]:
                problems.append(f"type {t!r} of agent {i} not in its type space")
        for x in e.cond_values:
            if not -ONE <= x <= ONE:
                problems.append(f"value {x} out of range [-1, 1] at {e.theta!r}")
    if total != ONE:
        problems.append(f"probabilities not summing to 1 (sum = {total})")
    if env.off_support and not problems:
        mass = env._vertex_sums[0]
        for v, x in env.off_support.items():
            ok_shape = 0 <= v.agent < env.n and len(v.theta_minus) == env.n - 1
            if not ok_shape or any(t not in ts for t, ts in zip(v.theta_minus, drop(env.type_spaces, v.agent))):
                problems.append(f"off-support entry {v!r} is not a vertex")
            elif mass.get(v):
                problems.append(f"off-support entry {v!r} has positive marginal mass")
            if not -ONE <= x <= ONE:
                problems.append(f"off-support value {x} out of range [-1, 1]")
    return problems


class WeightVector:
    """Vertex weights w_i(theta_{-i}); vertices without an entry weigh 0."""

    def __init__(self, type_spaces: Sequence[Sequence], values: Mapping[VertexId, Fraction] | None = None):
        self.type_spaces = tuple(tuple(ts) for ts in type_spaces)
        self.n = len(self.type_spaces)
        self.values: dict[VertexId, Fraction] = {}
        for v, w in (values or {}).items():
            v = VertexId(v[0], tuple(v[1]))
            self._check_vertex(v)
            w = parse_rational(w)
            if w != 0:
                self.values[v] = w

    def __getitem__(self, v: VertexId) -> Fraction:
        return self.values.get(v, ZERO)

    def __eq__(self, other):
        return isinstance(other, WeightVector) and (self.type_spaces, self.values) == (other.type_spaces, other.values)

    def __repr__(self):
        return f"WeightVector(n={self.n}, nonzero={len(self.values)})"

    def _check_vertex(self, v: VertexId) -> None:
        if not 0 <= v.agent < self.n:
            raise PeerMechError(f"unknown agent {v.agent}")
        others = [j for j in range(self.n) if j != v.agent]
        if len(v.theta_minus) != len(others):
            raise PeerMechError(f"vertex {v!r} has wrong length")
        for j, t in zip(others, v.theta_minus):
            if t not in self.type_spaces[j]:
                raise PeerMechError(f"unknown type {t!r} for agent {j}")

    def scaled(self, factor: Fraction) -> "WeightVector":
        return WeightVector(self.type_spaces, {v: w * factor for v, w in self.values.items()})

    def to_json(self) -> dict:
        return {
            "agents": self.n,
            "type_spaces": [list(ts) for ts in self.type_spaces],
            "weights": [
                {"agent": v.agent, "theta_minus": list(v.theta_minus), "w": str(w)}
                for v, w in sorted(self.values.items(), key=lambda kv: _sort_key(kv[0]))
            ],
        }


def _sort_key(v: VertexId):
    return (v.agent, tuple((type(t).__name__, t) for t in v.theta_minus))


def _read_json(source: str | Path) -> dict:
    text = str(source)
    if isinstance(source, Path) or not text.lstrip().startswith("{"):
        try:
            text = Path(source).read_text()
        except OSError as exc:
            raise PeerMechError(f"cannot read {source}: {exc}") from exc
    try:
        data = json.loads(text, parse_float=str)
    except json.JSONDecodeError as exc:
        raise PeerMechError(f"parse failure: {exc}") from exc
    if not isinstance(data, dict):
        raise PeerMechError("parse failure: top level must be an object")
    return data


def environment_from_json(data: dict) -> Environment:
    try:
        n = int(data["agents"])
        type_spaces = tuple(tuple(_label(t) for t in ts) for ts in data["type_spaces"])
        support = tuple(
            SupportEntry(
                tuple(_label(t) for t in row["theta"]),
                parse_rational(row["prob"]),
                tuple(parse_rational(x) for x in row["values"]),
            )
            for row in data["support"]
        )
        off = {
            VertexId(int(row["agent"]), tuple(_label(t) for t in row["theta_minus"])): parse_rational(row["value"])
            for row in data.get("off_support", ())
        }
    except (KeyError, TypeError) as exc:
        raise PeerMechError(f"parse failure: missing or malformed field {exc}") from exc
    return Environment(n, type_spaces, support, off).ensure_valid()


def load_environment(source: str | Path) -> Environment:
    """Read the JSON environment format from a path or from JSON text."""
    return environment_from_json(_read_json(source))


def weights_from_json(data: dict) -> WeightVector:
    try:
        type_spaces = tuple(tuple(_label(t) for t in ts) for ts in data["type_spaces"])
        if int(data["agents"]) != len(type_spaces):
            raise PeerMechError("agents does not match the number of type spaces")
        values: dict = {}
        for row in data["weights"]:
            v = VertexId(int(row["agent"]), tuple(_label(t) for t in row["theta_minus"]))
            if v in values:
                raise PeerMechError(f"duplicate weight for {v!r}")
            values[v] = parse_rational(row["w"])
    except (KeyError, TypeError) as exc:
        raise PeerMechError(f"parse failure: missing or malformed field {exc}") from exc
    return WeightVector(type_spaces, values)


def load_weights(source: str | Path) -> WeightVector:
    return weights_from_json(_read_json(source))


def load_instance(source: str | Path) -> Environment | WeightVector:
    """Read either file format, dispatching on the presence of ``support``."""
    data = _read_json(source)
    if "support" in data:
        return environment_from_json(data)
    if "weights" in data:
        return weights_from_json(data)
    raise PeerMechError("parse failure: neither 'support' nor 'weights' present")
