"""Reduction from maximum stable set to the deterministic 3-agent problem.

Agent 0's types are the source edges, agents 1 and 2 both have the source
vertices as types. Each edge ``e = vv'`` (``v`` before ``v'`` in input order)
contributes an induced 4-vertex path of unit-weight vertices

    (0, (v, v)) - (2, (e, v)) - (1, (e, v')) - (0, (v', v'))

An isolated source vertex ``v`` lies on no path; its diagonal vertex
``(0, (v, v))`` has no weighted neighbour and gets weight 1 so that it still
counts. Every other vertex weighs 0. The source graph has a stable set of size
``k_hat`` iff the reduced instance has a stable set of weight ``k_hat + |E|``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

from peermech.env import WeightVector
from peermech.errors import REDUCTION_SOURCE_GUARD, GuardExceeded, PeerMechError
from peermech.fgraph import FeasibilityGraph, VertexId, build_graph


@dataclass(frozen=True)
class SourceGraph:
    vertices: tuple
    edges: tuple  # pairs (u, v) with u before v in vertex order

    @classmethod
    def make(cls, vertices: Iterable, edges: Iterable[Sequence]) -> "SourceGraph":
        vertices = tuple(dict.fromkeys(vertices))
        pos = {v: k for k, v in enumerate(vertices)}
        seen = set()
        out = []
        for e in edges:
            u, v = e
            for x in (u, v):
                if x not in pos:
                    raise PeerMechError(f"edge endpoint {x!r} is not a vertex")
            if u == v:
                raise PeerMechError(f"self-loop at {u!r}")
            if pos[u] > pos[v]:
                u, v = v, u
            if (u, v) not in seen:
                seen.add((u, v))
                out.append((u, v))
        return cls(vertices, tuple(out))

    def adjacency_masks(self) -> list[int]:
        pos = {v: k for k, v in enumerate(self.vertices)}
        masks = [0] * len(self.vertices)
        for u, v in self.edges:
            masks[pos[u]] |= 1 << pos[v]
            masks[pos[v]] |= 1 << pos[u]
        return masks

    def to_json(self) -> dict:
        return {"vertices": list(self.vertices), "edges": [list(e) for e in self.edges]}


def parse_edge_list(text: str) -> SourceGraph:
    """``u v`` per line; a lone token declares an isolated vertex; ``#`` starts a comment."""
    vertices, edges = [], []
    for line in text.splitlines():
        tokens = line.split("#", 1)[0].split()
        if not tokens:
            continue
        if len(tokens) > 2:
            raise PeerMechError(f"bad edge line: {line!r}")
        vertices.extend(tokens)
        if len(tokens) == 2:
            edges.append(tuple(tokens))
    return SourceGraph.make(vertices, edges)


def graph_from_json(data) -> SourceGraph:
    """Either ``{"vertices": [...], "edges": [[u, v], ...]}`` or a bare edge list."""
    if isinstance(data, list):
        edges = [tuple(e) for e in data]
        vertices = [x for e in edges for x in e]
        return SourceGraph.make(vertices, edges)
    try:
        edges = [tuple(e) for e in data["edges"]]
        vertices = list(data.get("vertices", [])) + [x for e in edges for x in e]
    except (KeyError, TypeError) as exc:
        raise PeerMechError(f"parse failure: {exc}") from exc
    return SourceGraph.make(vertices, edges)


def load_source_graph(source: str | Path) -> SourceGraph:
    text = Path(source).read_text() if Path(str(source)).exists() else str(source)
    stripped = text.lstrip()
    if stripped.startswith("[") or stripped.startswith("{"):
        try:
            return graph_from_json(json.loads(text))
        except json.JSONDecodeError as exc:
            raise PeerMechError(f"parse failure: {exc}") from exc
    return parse_edge_list(text)


def edge_label(e: Sequence) -> str:
    return f"{e[0]}-{e[1]}"


@dataclass
class ReductionInstance:
    source: SourceGraph
    k_hat: int
    type_spaces: tuple
    weights: WeightVector
    k: int
    paths: dict = field(default_factory=dict)  # edge label -> 4 vertices, endpoints first and last
    isolated: tuple = ()  # diagonal vertices of isolated source vertices

    def endpoints(self, label: str) -> tuple:
        p = self.paths[label]
        return p[0], p[3]

    def interior(self, label: str) -> tuple:
        p = self.paths[label]
        return p[1], p[2]

    def graph(self) -> FeasibilityGraph:
        return build_graph(self.type_spaces, min_types=1)

    def to_json(self) -> dict:
        out = self.weights.to_json()
        out["k"] = self.k
        out["k_hat"] = self.k_hat
        return out


def reduce(source: SourceGraph, k_hat: int) -> ReductionInstance:
    if not source.edges:
        raise PeerMechError("unsupported: the source graph has no edges, so agent 0 would have no types")
    labels = [edge_label(e) for e in source.edges]
    verts = list(source.vertices)
    type_spaces = (tuple(labels), tuple(verts), tuple(verts))
    paths = {}
    values = {}
    for (v, v2), e in zip(source.edges, labels):
        path = (VertexId(0, (v, v)), VertexId(2, (e, v)), VertexId(1, (e, v2)), VertexId(0, (v2, v2)))
        paths[e] = path
        for x in path:
            values[x] = 1
    touched = {x for e in source.edges for x in e}
    isolated = tuple(VertexId(0, (v, v)) for v in verts if v not in touched)
    for x in isolated:
        values[x] = 1
    w = WeightVector(type_spaces, values)
    return ReductionInstance(source, k_hat, type_spaces, w, k_hat + len(source.edges), paths, isolated)


# -- brute force ---------------------------------------------------------------------


def max_stable_set_size(source: SourceGraph) -> int:
    """Largest stable set by exhaustive search over vertex subsets."""
    masks = source.adjacency_masks()
    k = len(masks)
    best = 0
    for subset in range(1 << k):
        size = bin(subset).count("1")
        if size <= best:
            continue
        if all(not (masks[a] & subset) for a in range(k) if subset >> a & 1):
            best = size
    return best


def max_weight_stable_set(g: FeasibilityGraph, w: WeightVector) -> tuple[int, list]:
    """Exhaustive memoized recursion over the positive-weight vertices."""
    verts = [v for v in g.vertices if w[v] > 0]
    idx = {v: a for a, v in enumerate(verts)}
    closed = []
    for a, v in enumerate(verts):
        m = 1 << a
        for u in g.neighbors(v):
            if u in idx:
                m |= 1 << idx[u]
        closed.append(m)
    wt = [w[v] for v in verts]

    @lru_cache(maxsize=None)
    def best(mask):
        if not mask:
            return 0, 0
        a = (mask & -mask).bit_length() - 1
        skip = best(mask & ~(1 << a))
        val, chosen = best(mask & ~closed[a])
        take = (val + wt[a], chosen | (1 << a))
        return take if take[0] > skip[0] else skip

    value, chosen = best((1 << len(verts)) - 1)
    best.cache_clear()
    return value, [verts[a] for a in range(len(verts)) if chosen >> a & 1]


def is_stable(g: FeasibilityGraph, vertices: Iterable[VertexId]) -> bool:
    vs = list(vertices)
    return all(not g._adjacent(a, b) for a, b in itertools.combinations(vs, 2))


def lift_stable_set(inst: ReductionInstance, stable: Iterable) -> list[VertexId]:
    """Source stable set -> reduced stable set of weight |S_hat| + |E|."""
    chosen = set(stable)
    out = [VertexId(0, (v, v)) for v in inst.source.vertices if v in chosen]
    for (v, _), path in zip(inst.source.edges, inst.paths.values()):
        # the interior vertex next to an unchosen endpoint
        out.append(path[2] if v in chosen else path[1])
    return out


def normalize_stable_set(inst: ReductionInstance, stable: Iterable[VertexId]) -> list[VertexId]:
    """Drop zero-weight vertices, then, for every path with both endpoints in
    the set, swap its first endpoint for the adjacent interior vertex. The
    weight is unchanged and the set stays stable."""
    s = [v for v in stable if inst.weights[v] > 0]
    changed = True
    while changed:
        changed = False
        for e, path in inst.paths.items():
            if path[0] in s and path[3] in s:
                s.remove(path[0])
                s.append(path[1])
                changed = True
    return s


def project_stable_set(inst: ReductionInstance, stable: Iterable[VertexId]) -> list:
    """Reduced stable set (normalized) -> source vertices whose endpoint it contains."""
    s = set(stable)
    return [v for v in inst.source.vertices if VertexId(0, (v, v)) in s]


@dataclass
class ReductionCheck:
    k_hat: int
    k: int
    alpha: int
    reduced_optimum: int
    source_side: bool
    reduced_side: bool

    @property
    def equivalent(self) -> bool:
        return self.source_side == self.reduced_side

    def to_json(self) -> dict:
        return {
            "k_hat": self.k_hat,
            "k": self.k,
            "alpha": self.alpha,
            "reduced_optimum": self.reduced_optimum,
            "source_has_stable_set": self.source_side,
            "reduced_has_weight": self.reduced_side,
            "equivalence": self.equivalent,
        }


def verify_reduction(source: SourceGraph, k_hat: int, guard: int = REDUCTION_SOURCE_GUARD) -> ReductionCheck:
    if len(source.vertices) > guard:
        raise GuardExceeded("reduction source vertices", len(source.vertices), guard)
    inst = reduce(source, k_hat)
    alpha = max_stable_set_size(source)
    g = inst.graph()
    for path in inst.paths.values():
        assert induced_path(g, path)
    opt, _ = max_weight_stable_set(g, inst.weights)
    return ReductionCheck(k_hat, inst.k, alpha, int(opt), alpha >= k_hat, opt >= inst.k)


def induced_path(g: FeasibilityGraph, path: Sequence[VertexId]) -> bool:
    for a, b in itertools.combinations(range(len(path)), 2):
        if g._adjacent(path[a], path[b]) != (b == a + 1):
            return False
    return True


# -- small graph generation ----------------------------------------------------------


def _canonical(k: int, edges: Iterable[tuple]) -> tuple:
    edges = list(edges)
    best = None
    for perm in itertools.permutations(range(k)):
        key = tuple(sorted(tuple(sorted((perm[a], perm[b]))) for a, b in edges))
        if best is None or key < best:
            best = key
    return best


def nonisomorphic_graphs(k: int) -> list[SourceGraph]:
    """One representative per isomorphism class of simple graphs on ``k`` vertices."""
    pairs = list(itertools.combinations(range(k), 2))
    seen = {}
    for r in range(len(pairs) + 1):
        for edges in itertools.combinations(pairs, r):
            key = _canonical(k, edges)
            if key not in seen:
                seen[key] = SourceGraph.make(range(k), key)
    return list(seen.values())


def small_graphs(max_vertices: int = 5, min_edges: int = 1) -> list[SourceGraph]:
    out = []
    for k in range(1, max_vertices + 1):
        out.extend(g for g in nonisomorphic_graphs(k) if len(g.edges) >= min_edges)
    return out


def named_graph(name: str) -> SourceGraph:
    """A few fixed graphs: triangle, edge, path3, c4, c5, k4."""
    table = {
        "edge": (2, [(0, 1)]),
        "triangle": (3, [(0, 1), (1, 2), (0, 2)]),
        "path3": (3, [(0, 1), (1, 2)]),
        "c4": (4, [(0, 1), (1, 2), (2, 3), (0, 3)]),
        "c5": (5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]),
        "k4": (4, list(itertools.combinations(range(4), 2))),
    }
    if name not in table:
        raise PeerMechError(f"unknown graph {name!r}")
    k, edges = table[name]
    return SourceGraph.make(range(k), edges)


__all__ = [
    "SourceGraph",
    "ReductionInstance",
    "ReductionCheck",
    "reduce",
    "verify_reduction",
    "normalize_stable_set",
    "lift_stable_set",
    "project_stable_set",
    "max_stable_set_size",
    "max_weight_stable_set",
    "nonisomorphic_graphs",
    "small_graphs",
    "parse_edge_list",
    "load_source_graph",
    "named_graph",
]
