"""Environment generators and scaling experiments for ranking-based mechanisms."""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from peermech.env import Environment, SupportEntry, parse_rational
from peermech.errors import JURY_AGENT_GUARD, SYMMETRIC_AGENT_GUARD, GuardExceeded, PeerMechError
from peermech.fgraph import VertexId, drop
from peermech.mech import MAY, MUST, RankContext, jury_mechanism_from_rule, ranking_utility, utility
from peermech.solve import STATUS_GUARD, ranking_lower_bound, solve_jury, solve_lp, upper_bound

ZERO = Fraction(0)
ONE = Fraction(1)

SUPPORT_GUARD = 200_000

# -- the three-agent separating environment ------------------------------------------

# 9-hole through the profiles below; agent i's peer value is 1 exactly on it
B1_PROFILES = ((1, 1, 1), (2, 1, 1), (2, 2, 1), (2, 2, 2), (3, 2, 2), (3, 3, 2), (3, 3, 3), (1, 3, 3), (1, 1, 3))
B1_HOLE = (
    VertexId(0, (1, 1)),
    VertexId(1, (2, 1)),
    VertexId(2, (2, 2)),
    VertexId(0, (2, 2)),
    VertexId(1, (3, 2)),
    VertexId(2, (3, 3)),
    VertexId(0, (3, 3)),
    VertexId(1, (1, 3)),
    VertexId(2, (1, 1)),
)


def gen_group_env(ell: int, local_off_support: bool = True) -> Environment:
    """``ell`` independent copies of the 3-agent environment; group g holds
    agents 3g, 3g+1, 3g+2.

    With ``local_off_support`` a peer value whose conditioning event has
    probability zero only because of other groups' reports is set to the
    value implied by the agent's own group, matching independence across
    groups. Otherwise such peer values fall back to 0."""
    if ell < 1:
        raise PeerMechError("ell must be at least 1")
    hole = set(B1_HOLE)
    n = 3 * ell
    prob = Fraction(1, 9**ell)
    support = []
    for parts in itertools.product(B1_PROFILES, repeat=ell):
        theta = tuple(t for part in parts for t in part)
        values = tuple(
            ONE if VertexId(k, drop(part, k)) in hole else ZERO for part in parts for k in range(3)
        )
        support.append(SupportEntry(theta, prob, values))
    off = {}
    if local_off_support and ell > 1:
        other_parts = list(itertools.product((1, 2, 3), repeat=3 * (ell - 1)))
        on_support = {tuple(t for part in ps for t in part) for ps in itertools.product(B1_PROFILES, repeat=ell - 1)}
        for v in B1_HOLE:
            for g in range(ell):
                agent = 3 * g + v.agent
                for rest in other_parts:
                    if rest in on_support:
                        continue
                    # rest lists the other groups' types in agent order
                    theta_minus = rest[: 3 * g] + v.theta_minus + rest[3 * g :]
                    off[VertexId(agent, theta_minus)] = ONE
    return Environment(n, tuple((1, 2, 3) for _ in range(n)), tuple(support), off).ensure_valid()


# -- signal environments -------------------------------------------------------------


def _check_dist(d: Mapping, what: str) -> dict:
    d = {k: parse_rational(v) for k, v in d.items()}
    if any(p < 0 for p in d.values()) or sum(d.values()) != 1:
        raise PeerMechError(f"{what} is not a probability vector")
    return {k: p for k, p in d.items() if p}


@dataclass
class Observation:
    observer: int
    target: int
    kernel: dict  # u -> {signal: prob}
    alphabet: tuple


def _signal_env(n: int, priors: Sequence[Mapping], observations: Sequence[Observation], guard: int = SUPPORT_GUARD):
    """Environment where values are independent across agents and each
    observation is a conditionally independent signal about its target.

    Returns the environment and, per observer, the list of targets in the
    order they appear in that observer's type tuple."""
    layout = [[] for _ in range(n)]
    alphabets = [[] for _ in range(n)]
    by_target = [[] for _ in range(n)]
    for ob in sorted(observations, key=lambda o: (o.observer, o.target)):
        layout[ob.observer].append(ob.target)
        alphabets[ob.observer].append(ob.alphabet)
        by_target[ob.target].append(ob)
    for j in range(n):
        if not layout[j]:
            raise PeerMechError(f"agent {j} observes nothing, so its type space would be a singleton")
    type_spaces = tuple(tuple(itertools.product(*alphabets[j])) for j in range(n))
    # per target: signal vector (ordered like by_target) -> (mass, value mass)
    tables = []
    count = 1
    for i in range(n):
        f = priors[i]
        obs = by_target[i]
        table = {}
        for sig in itertools.product(*(ob.alphabet for ob in obs)):
            mass = ZERO
            vmass = ZERO
            for u, fu in f.items():
                p = fu
                for ob, s in zip(obs, sig):
                    p *= ob.kernel[u].get(s, ZERO)
                    if not p:
                        break
                mass += p
                vmass += p * u
            if mass:
                table[sig] = (mass, vmass / mass)
        tables.append(table)
        count *= len(table)
    if count > guard:
        raise GuardExceeded("support profiles", count, guard)
    pos = {}
    for i in range(n):
        for k, ob in enumerate(by_target[i]):
            pos[(ob.observer, ob.target)] = k
    support = []
    for combo in itertools.product(*(sorted(t.items(), key=lambda kv: repr(kv[0])) for t in tables)):
        # combo[i] = (signals about i, (mass, posterior mean))
        types = []
        for j in range(n):
            types.append(tuple(combo[i][0][pos[(j, i)]] for i in layout[j]))
        prob = ONE
        for _, (mass, _) in combo:
            prob *= mass
        support.append(SupportEntry(tuple(types), prob, tuple(c[1][1] for c in combo)))
    support.sort(key=lambda e: repr(e.theta))
    env = Environment(n, type_spaces, tuple(support)).ensure_valid()
    return env, layout


@dataclass
class InfoStructure:
    """Values independent with priors ``f[i]``; observer j's signal about i
    has alphabet ``alphabets[(i, j)]`` and kernel ``kernels[(i, j)][u]``.

    Defined for agents ``0 .. len(f) - 1``."""

    f: list
    kernels: dict
    alphabets: dict
    exchangeable_suppliers: bool = False
    exchangeable_recipients: bool = False

    def __post_init__(self):
        self.f = [_check_dist(fi, f"prior of agent {i}") for i, fi in enumerate(self.f)]
        for i, fi in enumerate(self.f):
            if any(not -1 <= u <= 1 for u in fi):
                raise PeerMechError(f"value support of agent {i} leaves [-1, 1]")
        kernels = {}
        for (i, j), k in self.kernels.items():
            kernels[(i, j)] = {parse_rational(u): _check_dist(dist, f"kernel ({i},{j}) at {u}") for u, dist in k.items()}
            if set(kernels[(i, j)]) != set(self.f[i]):
                raise PeerMechError(f"kernel ({i},{j}) must cover the value support of agent {i}")
        self.kernels = kernels
        self.alphabets = {k: tuple(v) for k, v in self.alphabets.items()}
        for key in self.kernels:
            if key not in self.alphabets:
                raise PeerMechError(f"missing alphabet for pair {key}")
        if self.exchangeable_suppliers and not self._suppliers_ok():
            raise PeerMechError("flagged exchangeable-suppliers but kernels depend on the observer")
        if self.exchangeable_recipients and not self._recipients_ok():
            raise PeerMechError("flagged exchangeable-recipients but priors or kernels depend on the target")

    @property
    def size(self) -> int:
        return len(self.f)

    def _suppliers_ok(self) -> bool:
        for i in range(self.size):
            ks = [(self.alphabets[(i, j)], self.kernels[(i, j)]) for j in range(self.size) if j != i]
            if any(k != ks[0] for k in ks):
                return False
        return True

    def _recipients_ok(self) -> bool:
        if any(fi != self.f[0] for fi in self.f):
            return False
        for j in range(self.size):
            ks = [(self.alphabets[(i, j)], self.kernels[(i, j)]) for i in range(self.size) if i != j]
            if any(k != ks[0] for k in ks):
                return False
        return True

    def posterior_mean(self, i: int, signals: Mapping[int, object]) -> Fraction:
        """E[u_i | signals from the given observers]."""
        mass = vmass = ZERO
        for u, fu in self.f[i].items():
            p = fu
            for j, s in signals.items():
                p *= self.kernels[(i, j)][u].get(s, ZERO)
            mass += p
            vmass += p * u
        if not mass:
            raise PeerMechError("signal combination has probability 0")
        return vmass / mass

    def to_json(self) -> dict:
        return {
            "f": [{str(u): str(p) for u, p in fi.items()} for fi in self.f],
            "signals": [
                {
                    "target": i,
                    "observer": j,
                    "alphabet": list(self.alphabets[(i, j)]),
                    "kernel": {str(u): {str(s): str(p) for s, p in d.items()} for u, d in k.items()},
                }
                for (i, j), k in sorted(self.kernels.items())
            ],
            "exchangeable_suppliers": self.exchangeable_suppliers,
            "exchangeable_recipients": self.exchangeable_recipients,
        }


def structure_from_json(data: Mapping) -> InfoStructure:
    try:
        f = [{parse_rational(u): p for u, p in fi.items()} for fi in data["f"]]
        kernels, alphabets = {}, {}
        for row in data["signals"]:
            key = (int(row["target"]), int(row["observer"]))
            alphabets[key] = tuple(row["alphabet"])
            kernels[key] = {parse_rational(u): dict(d) for u, d in row["kernel"].items()}
    except (KeyError, TypeError, AttributeError) as exc:
        raise PeerMechError(f"parse failure: {exc}") from exc
    return InfoStructure(
        f, kernels, alphabets, bool(data.get("exchangeable_suppliers")), bool(data.get("exchangeable_recipients"))
    )


def suppliers_structure(f: Sequence[Mapping], kernel: Sequence[Mapping], alphabet: Sequence[Sequence]) -> InfoStructure:
    """Kernel and alphabet depend only on the target i."""
    size = len(f)
    kernels = {(i, j): kernel[i] for i in range(size) for j in range(size) if i != j}
    alphabets = {(i, j): alphabet[i] for i in range(size) for j in range(size) if i != j}
    return InfoStructure(list(f), kernels, alphabets, exchangeable_suppliers=True)


def recipients_structure(f: Mapping, kernel: Sequence[Mapping], alphabet: Sequence[Sequence]) -> InfoStructure:
    """Common prior; kernel and alphabet depend only on the observer j."""
    size = len(kernel)
    kernels = {(i, j): kernel[j] for i in range(size) for j in range(size) if i != j}
    alphabets = {(i, j): alphabet[j] for i in range(size) for j in range(size) if i != j}
    return InfoStructure([dict(f) for _ in range(size)], kernels, alphabets, exchangeable_recipients=True)


def gen_ci_env(structure: InfoStructure, n: int) -> Environment:
    """The n-agent environment where every agent j observes one signal about each other agent."""
    return _ci_env_with_layout(structure, n)[0]


def _ci_env_with_layout(structure: InfoStructure, n: int):
    if n < 2:
        raise PeerMechError("need at least 2 agents")
    if n > structure.size:
        raise PeerMechError(f"structure defines {structure.size} agents, {n} requested")
    obs = [
        Observation(j, i, structure.kernels[(i, j)], structure.alphabets[(i, j)])
        for i in range(n)
        for j in range(n)
        if i != j
    ]
    return _signal_env(n, structure.f[:n], obs)


def _rng_fraction(rng: random.Random, k: int, denom: int = 12) -> list[Fraction]:
    """A random probability vector of length k with positive rational entries."""
    raw = [rng.randint(1, denom) for _ in range(k)]
    total = sum(raw)
    return [Fraction(r, total) for r in raw]


def random_structure(size: int, seed: int, kind: str = "suppliers", levels=(-1, 1), alphabet=("a", "b")) -> InfoStructure:
    """Random structure of the requested exchangeability kind (``suppliers``,
    ``recipients`` or ``general``), covering ``size`` agents."""
    rng = random.Random(seed)
    levels = [parse_rational(u) for u in levels]

    def rand_kernel():
        return {u: dict(zip(alphabet, _rng_fraction(rng, len(alphabet)))) for u in levels}

    def rand_prior():
        return dict(zip(levels, _rng_fraction(rng, len(levels))))

    if kind == "suppliers":
        return suppliers_structure([rand_prior() for _ in range(size)], [rand_kernel() for _ in range(size)], [alphabet] * size)
    if kind == "recipients":
        return recipients_structure(rand_prior(), [rand_kernel() for _ in range(size)], [alphabet] * size)
    if kind == "general":
        kernels = {(i, j): rand_kernel() for i in range(size) for j in range(size) if i != j}
        alphabets = {key: tuple(alphabet) for key in kernels}
        return InfoStructure([rand_prior() for _ in range(size)], kernels, alphabets)
    raise PeerMechError(f"unknown structure kind {kind!r}")


@dataclass
class ReplicationReport:
    case: str
    n: int
    target: Fraction  # highest-peer-value benchmark in the n-agent environment
    jury_utility: Fraction
    jurors: tuple
    is_jury: bool

    @property
    def equal(self) -> bool:
        return self.target == self.jury_utility

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "n": self.n,
            "target": str(self.target),
            "jury_utility": str(self.jury_utility),
            "jurors": list(self.jurors),
            "is_jury": self.is_jury,
            "equal": self.equal,
        }


def jury_replication_check(structure: InfoStructure, n: int) -> ReplicationReport:
    """Replicate the full-information benchmark of the n-agent environment by a
    jury mechanism in the 2n-agent environment and compare exactly."""
    from peermech.mech import is_jury

    if structure.exchangeable_suppliers:
        case = "suppliers"
    elif structure.exchangeable_recipients:
        case = "recipients"
    else:
        raise PeerMechError("structure is flagged neither exchangeable-suppliers nor exchangeable-recipients")
    target = upper_bound(gen_ci_env(structure, n), MUST)
    env2, layout = _ci_env_with_layout(structure, 2 * n)
    if case == "suppliers":
        jurors = tuple(range(n, 2 * n))

        def candidate_signals(key, i):
            # juror n+j reports on candidate i as agent j would
            return {j: key[j][layout[n + j].index(i)] for j in range(n) if j != i}

        candidates = list(range(n))
        posterior = lambda i, sig: structure.posterior_mean(i, sig)
        winner = lambda i: i
    else:
        jurors = tuple(range(n))

        def candidate_signals(key, i):
            # juror j reports on candidate n+i as it would on agent i
            return {j: key[j][layout[j].index(n + i)] for j in range(n) if j != i}

        candidates = list(range(n))
        posterior = lambda i, sig: structure.posterior_mean(i, sig)
        winner = lambda i: n + i

    def rule(key):
        best = max(candidates, key=lambda i: (posterior(i, candidate_signals(key, i)), -i))
        return winner(best)

    m = jury_mechanism_from_rule(env2.type_spaces, jurors, rule, MUST)
    ok, _ = is_jury(m)
    return ReplicationReport(case, n, target, utility(env2, m), jurors, ok)


def gen_network_env(
    adjacency: Sequence[Sequence[int]],
    value_levels: Sequence = ("-1", "1"),
    noise="1/4",
    seed: int | None = None,
    observe_own: bool = False,
) -> Environment:
    """Each neighbor j of i sees u_i through a mislabeling channel: the true
    level with probability 1 - noise, else a uniformly random level.

    Priors are uniform when ``seed`` is None and random otherwise. With
    ``observe_own`` every agent also sees its own value exactly."""
    levels = [parse_rational(u) for u in value_levels]
    if len(set(levels)) != len(levels) or not levels:
        raise PeerMechError("value levels must be distinct")
    noise = parse_rational(noise)
    if not 0 <= noise <= 1:
        raise PeerMechError("noise must lie in [0, 1]")
    n = len(adjacency)
    for i, nb in enumerate(adjacency):
        for j in nb:
            if not 0 <= j < n or j == i:
                raise PeerMechError(f"bad neighbor {j} of agent {i}")
            if i not in adjacency[j]:
                raise PeerMechError(f"adjacency is not symmetric at ({i}, {j})")
    k = len(levels)
    labels = tuple(str(u) for u in levels)
    kernel = {u: {labels[b]: (1 - noise) * (a == b) + noise / k for b in range(k)} for a, u in enumerate(levels)}
    exact = {u: {labels[a]: ONE} for a, u in enumerate(levels)}
    if seed is None:
        priors = [{u: Fraction(1, k) for u in levels} for _ in range(n)]
    else:
        rng = random.Random(seed)
        priors = [dict(zip(levels, _rng_fraction(rng, k))) for _ in range(n)]
    obs = []
    for i in range(n):
        for j in sorted(set(adjacency[i])):
            obs.append(Observation(j, i, kernel, labels))
        if observe_own:
            obs.append(Observation(i, i, exact, labels))
    return _signal_env(n, priors, obs)[0]


def ring(n: int) -> list[list[int]]:
    return [sorted({(i - 1) % n, (i + 1) % n}) for i in range(n)]


def star(n: int) -> list[list[int]]:
    return [list(range(1, n))] + [[0] for _ in range(1, n)]


def empty_network(n: int) -> list[list[int]]:
    return [[] for _ in range(n)]


# -- symmetric environments ----------------------------------------------------------


def symmetric_joint(n: int, type_alphabet: Sequence, seed: int, value_levels=(-1, 0, 1), atoms: int = 6) -> dict:
    """Random finite joint over (values, types), averaged over all n!
    simultaneous permutations of agents."""
    if n > SYMMETRIC_AGENT_GUARD:
        raise GuardExceeded("symmetric agents", n, SYMMETRIC_AGENT_GUARD)
    rng = random.Random(seed)
    levels = [parse_rational(u) for u in value_levels]
    alphabet = list(type_alphabet)
    raw = {}
    weights = _rng_fraction(rng, atoms)
    for w in weights:
        u = tuple(rng.choice(levels) for _ in range(n))
        t = tuple(rng.choice(alphabet) for _ in range(n))
        raw[(u, t)] = raw.get((u, t), ZERO) + w
    perms = list(itertools.permutations(range(n)))
    joint = {}
    for (u, t), w in raw.items():
        for p in perms:
            key = (tuple(u[p[k]] for k in range(n)), tuple(t[p[k]] for k in range(n)))
            joint[key] = joint.get(key, ZERO) + w / len(perms)
    return joint


def env_from_joint(n: int, type_spaces: Sequence[Sequence], joint: Mapping) -> Environment:
    mass, vmass = {}, {}
    for (u, t), w in joint.items():
        mass[t] = mass.get(t, ZERO) + w
        acc = vmass.setdefault(t, [ZERO] * n)
        for i in range(n):
            acc[i] += w * u[i]
    support = [SupportEntry(t, mass[t], tuple(x / mass[t] for x in vmass[t])) for t in sorted(mass, key=repr) if mass[t]]
    return Environment(n, tuple(tuple(ts) for ts in type_spaces), tuple(support)).ensure_valid()


def gen_symmetric_env(n: int, type_alphabet: Sequence, seed: int, value_levels=(-1, 0, 1), atoms: int = 6) -> Environment:
    joint = symmetric_joint(n, type_alphabet, seed, value_levels, atoms)
    return env_from_joint(n, [tuple(type_alphabet)] * n, joint)


# -- regularity ----------------------------------------------------------------------


def estimate_regularity(env: Environment, eps, grid: Sequence | None = None) -> dict:
    """eta -> mass of profiles where at least a fraction eta of agents are
    within eps of the highest peer value."""
    eps = parse_rational(eps)
    n = env.n
    grid = [Fraction(k, n) for k in range(1, n + 1)] if grid is None else [parse_rational(x) for x in grid]
    shares = []
    for e in env.support:
        pv = [env.peer_value_at(VertexId(i, drop(e.theta, i))) for i in range(n)]
        top = max(pv)
        shares.append((e.prob, Fraction(sum(1 for x in pv if x + eps >= top), n)))
    return {eta: sum((p for p, s in shares if s >= eta), ZERO) for eta in grid}


# -- scaling experiments -------------------------------------------------------------

CSV_COLUMNS = [
    "generator",
    "n",
    "p",
    "seed",
    "ranking_utility",
    "jury_value",
    "jury_is_bound",
    "lp_value",
    "upper_bound",
    "max_delta",
    "regularity_mass",
    "analytic_lb",
]

GENERATORS = ("group", "ring", "star", "ci")


@dataclass
class ExperimentConfig:
    generator: str
    n_grid: list
    p_grid: list
    seed: int = 0
    replications: int = 1
    params: dict = field(default_factory=dict)
    output: str | None = None
    eps: str = "1/10"
    lp_guard: int = 300
    jury_guard: int = JURY_AGENT_GUARD

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise PeerMechError(f"unknown generator {self.generator!r}; expected one of {GENERATORS}")
        self.n_grid = [int(n) for n in self.n_grid]
        self.p_grid = [str(parse_rational(p)) for p in self.p_grid]

    @classmethod
    def from_json(cls, data: Mapping) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise PeerMechError(f"unknown config keys {sorted(extra)}")
        return cls(**data)

    def to_json(self) -> dict:
        return asdict(self)


def derive_seed(seed: int, *parts) -> int:
    """Deterministic sub-seed for one experiment cell."""
    text = ":".join(str(x) for x in (seed,) + parts)
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:4], "big")


def build_env(generator: str, n: int, seed: int, params: Mapping) -> Environment:
    if generator == "group":
        if n % 3:
            raise PeerMechError("group generator needs n divisible by 3")
        return gen_group_env(n // 3)
    if generator in ("ring", "star"):
        adj = ring(n) if generator == "ring" else star(n)
        return gen_network_env(adj, params.get("levels", ("-1", "1")), params.get("noise", "1/4"), seed)
    if generator == "ci":
        s = random_structure(n, seed, params.get("kind", "general"), params.get("levels", (-1, 1)))
        return gen_ci_env(s, n)
    raise PeerMechError(f"unknown generator {generator!r}")


def _cell(args):
    config, n, rep = args
    sub = derive_seed(config.seed, config.generator, n, rep)
    env = build_env(config.generator, n, sub, config.params)
    ctx = RankContext(env)
    if n <= config.jury_guard:
        jury, bound = solve_jury(env, MAY).objective, False
    else:
        jury, bound = solve_jury(env, MAY, sizes=(0, 1)).objective, True
    rep_lp = solve_lp(env, MAY, guard=config.lp_guard)
    lp = None if rep_lp.status == STATUS_GUARD else rep_lp.objective
    ub = upper_bound(env, MAY)
    deltas = [ctx.informational_size(e.theta) for e in env.support]
    eps = parse_rational(config.eps)
    rows = []
    for p in config.p_grid:
        p = parse_rational(p)
        ru = ranking_utility(env, p, ctx)
        lb = ranking_lower_bound(env, p, ctx)
        assert lb <= ru, (lb, ru)
        reg = estimate_regularity(env, eps, [p])[p]
        rows.append(
            {
                "generator": config.generator,
                "n": n,
                "p": str(p),
                "seed": sub,
                "ranking_utility": str(ru),
                "jury_value": str(jury),
                "jury_is_bound": str(bound).lower(),
                "lp_value": "" if lp is None else str(lp),
                "upper_bound": str(ub),
                "max_delta": str(max(deltas)),
                "regularity_mass": str(reg),
                "analytic_lb": str(lb),
            }
        )
    return (n, rep), rows


def run_scaling_experiment(config: ExperimentConfig, jobs: int = 1) -> list[dict]:
    """One row per (n, replication, p); rows ordered by n, replication, p.
    Writes the CSV to ``config.output`` when set."""
    cells = [(config, n, rep) for n in config.n_grid for rep in range(config.replications)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_cell, cells))
    else:
        results = [_cell(c) for c in cells]
    rows = [row for _, chunk in sorted(results, key=lambda r: r[0]) for row in chunk]
    if config.output:
        Path(config.output).write_text(rows_to_csv(rows))
    return rows


def rows_to_csv(rows: Sequence[Mapping], float_column: bool = False) -> str:
    buf = io.StringIO()
    cols = list(CSV_COLUMNS)
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: row[c] for c in cols})
    return buf.getvalue()
