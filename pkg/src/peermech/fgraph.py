"""The feasibility graph.

Vertices are commitments ``(i, theta_{-i})``; two commitments of different
agents are adjacent when some type profile contains both of them, i.e. when
their partial profiles agree on every agent other than the two involved.
Maximal cliques are exactly the type profiles.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from typing import Callable, Iterable, NamedTuple, Sequence

from peermech.errors import GuardExceeded, HOLE_SEARCH_GUARD, PeerMechError


class VertexId(NamedTuple):
    agent: int
    theta_minus: tuple

    def __str__(self):
        return format_vertex(self)


def drop(theta: Sequence, i: int) -> tuple:
    return tuple(theta[:i]) + tuple(theta[i + 1 :])


def insert(theta_minus: Sequence, i: int, t) -> tuple:
    return tuple(theta_minus[:i]) + (t,) + tuple(theta_minus[i:])


def format_vertex(v: VertexId) -> str:
    return f"{v.agent}:({','.join(str(t) for t in v.theta_minus)})"


def parse_vertex(text: str, type_spaces: Sequence[Sequence]) -> VertexId:
    """Inverse of :func:`format_vertex`; labels are matched against the type spaces by string."""
    try:
        head, rest = text.strip().split(":", 1)
        agent = int(head)
        body = rest.strip()
        if not (body.startswith("(") and body.endswith(")")):
            raise ValueError
        parts = [p.strip() for p in body[1:-1].split(",")] if body[1:-1].strip() else []
    except ValueError as exc:
        raise PeerMechError(f"cannot parse vertex {text!r}") from exc
    others = [j for j in range(len(type_spaces)) if j != agent]
    if not 0 <= agent < len(type_spaces) or len(parts) != len(others):
        raise PeerMechError(f"vertex {text!r} does not fit the type spaces")
    labels = []
    for j, p in zip(others, parts):
        match = [t for t in type_spaces[j] if str(t) == p]
        if not match:
            raise PeerMechError(f"unknown type {p!r} for agent {j}")
        labels.append(match[0])
    return VertexId(agent, tuple(labels))


class FeasibilityGraph:
    def __init__(self, type_spaces: Sequence[Sequence]):
        self.type_spaces = tuple(tuple(ts) for ts in type_spaces)
        self.n = len(self.type_spaces)
        self.vertices: list[VertexId] = []
        for i in range(self.n):
            others = [self.type_spaces[j] for j in range(self.n) if j != i]
            self.vertices.extend(VertexId(i, t) for t in itertools.product(*others))
        self.index = {v: k for k, v in enumerate(self.vertices)}
        self._neighbors: dict[VertexId, tuple] = {}

    def __len__(self):
        return len(self.vertices)

    def __contains__(self, v):
        return v in self.index

    def __repr__(self):
        sizes = "x".join(str(len(ts)) for ts in self.type_spaces)
        return f"FeasibilityGraph({sizes}, vertices={len(self.vertices)})"

    @property
    def num_cliques(self) -> int:
        out = 1
        for ts in self.type_spaces:
            out *= len(ts)
        return out

    def profiles(self) -> Iterable[tuple]:
        return itertools.product(*self.type_spaces)

    def check_vertex(self, v: VertexId) -> VertexId:
        v = VertexId(v[0], tuple(v[1]))
        if v not in self.index:
            raise PeerMechError(f"invalid vertex {v!r}")
        return v

    def adjacent(self, v: VertexId, w: VertexId) -> bool:
        v = self.check_vertex(v)
        w = self.check_vertex(w)
        return self._adjacent(v, w)

    def _adjacent(self, v: VertexId, w: VertexId) -> bool:
        i, j = v.agent, w.agent
        if i == j:
            return False
        # full profiles without i resp. j must agree on every agent k outside {i, j}
        tv = insert(v.theta_minus, i, None)
        tw = insert(w.theta_minus, j, None)
        return all(tv[k] == tw[k] for k in range(self.n) if k != i and k != j)

    def neighbors(self, v: VertexId) -> tuple:
        cached = self._neighbors.get(v)
        if cached is not None:
            return cached
        out = []
        for t in self.type_spaces[v.agent]:
            theta = insert(v.theta_minus, v.agent, t)
            for j in range(self.n):
                if j != v.agent:
                    out.append(VertexId(j, drop(theta, j)))
        result = tuple(out)
        self._neighbors[v] = result
        return result

    def clique_of_profile(self, theta: Sequence) -> tuple:
        theta = tuple(theta)
        if len(theta) != self.n or any(t not in ts for t, ts in zip(theta, self.type_spaces)):
            raise PeerMechError(f"invalid profile {theta!r}")
        return tuple(VertexId(i, drop(theta, i)) for i in range(self.n))

    def cliques(self) -> Iterable[tuple]:
        for theta in self.profiles():
            yield tuple(VertexId(i, drop(theta, i)) for i in range(self.n))

    def shared_profile(self, v: VertexId, w: VertexId) -> tuple | None:
        """The unique profile containing two adjacent vertices, else ``None``."""
        if not self._adjacent(v, w):
            return None
        theta = list(insert(v.theta_minus, v.agent, None))
        theta[v.agent] = w.theta_minus[v.agent if v.agent < w.agent else v.agent - 1]
        return tuple(theta)

    def sort_key(self, v: VertexId) -> int:
        return self.index[v]

    def to_json(self) -> dict:
        return {
            "type_spaces": [list(ts) for ts in self.type_spaces],
            "vertices": [format_vertex(v) for v in self.vertices],
            "adjacency": {
                format_vertex(v): sorted((format_vertex(w) for w in self.neighbors(v)), key=str)
                for v in self.vertices
            },
        }

    def to_dot(self) -> str:
        lines = ["graph feasibility {"]
        for v in self.vertices:
            lines.append(f'  "{format_vertex(v)}";')
        for k, v in enumerate(self.vertices):
            for w in self.neighbors(v):
                if self.index[w] > k:
                    lines.append(f'  "{format_vertex(v)}" -- "{format_vertex(w)}";')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def export_json(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


def build_graph(type_spaces: Sequence[Sequence], min_types: int = 2) -> FeasibilityGraph:
    """Build the feasibility graph. ``min_types=1`` admits singleton type spaces."""
    if len(type_spaces) < 2:
        raise PeerMechError("need at least 2 agents")
    for i, ts in enumerate(type_spaces):
        if len(ts) < min_types:
            raise PeerMechError(f"type space of agent {i} has fewer than {min_types} types")
        if len(set(ts)) != len(ts):
            raise PeerMechError(f"duplicate type label for agent {i}")
    return FeasibilityGraph(type_spaces)


# -- induced cycles ---------------------------------------------------------


def _bitmask_adjacency(nodes: Sequence, adj: Callable) -> list[int]:
    masks = [0] * len(nodes)
    for a in range(len(nodes)):
        for b in range(a + 1, len(nodes)):
            if adj(nodes[a], nodes[b]):
                masks[a] |= 1 << b
                masks[b] |= 1 << a
    return masks


def induced_odd_cycles(masks: Sequence[int], max_len: int, min_len: int = 5, first_only: bool = False) -> list[list[int]]:
    """All induced odd cycles of length ``min_len..max_len`` on a bitmask graph.

    Each cycle starts at its smallest node, followed by its smaller neighbour.
    """
    n = len(masks)
    found: list[list[int]] = []
    for s in range(n):
        allowed = ((1 << n) - 1) & ~((1 << (s + 1)) - 1)
        # distances to s inside the allowed region bound how soon a path can close
        dist = _distances(masks, s, allowed | (1 << s))
        start_nbrs = masks[s] & allowed
        a_mask = start_nbrs
        while a_mask:
            a = (a_mask & -a_mask).bit_length() - 1
            a_mask &= a_mask - 1
            stack = [([s, a], 0)]
            while stack:
                path, blocked = stack.pop()
                last = path[-1]
                cand = masks[last] & allowed & ~blocked
                length = len(path) + 1
                while cand:
                    w = (cand & -cand).bit_length() - 1
                    cand &= cand - 1
                    if masks[s] >> w & 1:
                        if length >= min_len and length % 2 == 1 and path[1] < w and length <= max_len:
                            found.append(path + [w])
                            if first_only:
                                return found
                        continue
                    # extending needs at least dist[w] more steps to return to s
                    if w not in dist or length + dist[w] - 1 > max_len:
                        continue
                    stack.append((path + [w], blocked | masks[last] | (1 << last)))
    return found


def _distances(masks: Sequence[int], s: int, region: int) -> dict[int, int]:
    dist = {s: 0}
    queue = deque([s])
    while queue:
        u = queue.popleft()
        nbrs = masks[u] & region
        while nbrs:
            w = (nbrs & -nbrs).bit_length() - 1
            nbrs &= nbrs - 1
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


def find_odd_holes(
    g: FeasibilityGraph,
    subset: Iterable[VertexId] | None = None,
    max_len: int = 7,
    first_only: bool = False,
    guard: int = HOLE_SEARCH_GUARD,
) -> list[tuple]:
    """Odd holes of length 5..max_len in the subgraph induced by ``subset``."""
    if max_len < 5 or max_len % 2 == 0:
        raise PeerMechError("max_len must be odd and at least 5")
    nodes = sorted({g.check_vertex(v) for v in subset} if subset is not None else g.vertices, key=g.sort_key)
    if len(nodes) > guard:
        raise GuardExceeded("hole search", len(nodes), guard)
    pos = {v: k for k, v in enumerate(nodes)}
    masks = [0] * len(nodes)
    for k, v in enumerate(nodes):
        for w in g.neighbors(v):
            p = pos.get(w)
            if p is not None:
                masks[k] |= 1 << p
    cycles = induced_odd_cycles(masks, max_len, first_only=first_only)
    holes = [tuple(nodes[k] for k in c) for c in cycles]
    for h in holes:
        assert is_odd_hole(g, h)
    return holes


def is_odd_hole(g: FeasibilityGraph, cycle: Sequence[VertexId]) -> bool:
    k = len(cycle)
    if k < 5 or k % 2 == 0 or len(set(cycle)) != k:
        return False
    for a in range(k):
        for b in range(a + 1, k):
            consecutive = b == a + 1 or (a == 0 and b == k - 1)
            if g._adjacent(cycle[a], cycle[b]) != consecutive:
                return False
    return True


def canonical_hole(g: FeasibilityGraph, cycle: Sequence[VertexId]) -> tuple:
    """Rotate/reflect so the smallest vertex is first and its smaller neighbour second."""
    cycle = list(cycle)
    k = min(range(len(cycle)), key=lambda t: g.sort_key(cycle[t]))
    rotated = cycle[k:] + cycle[:k]
    if g.sort_key(rotated[-1]) < g.sort_key(rotated[1]):
        rotated = [rotated[0]] + rotated[1:][::-1]
    return tuple(rotated)


def complement_has_odd_hole(g: FeasibilityGraph, subset: Iterable[VertexId] | None = None) -> list[tuple]:
    """Odd holes of the explicitly built complement graph (small graphs only)."""
    nodes = sorted(set(subset) if subset is not None else g.vertices, key=g.sort_key)
    masks = _bitmask_adjacency(nodes, lambda v, w: not g._adjacent(v, w))
    max_len = len(nodes) if len(nodes) % 2 == 1 else len(nodes) - 1
    if max_len < 5:
        return []
    return [tuple(nodes[k] for k in c) for c in induced_odd_cycles(masks, max_len, first_only=True)]


def components_of(g: FeasibilityGraph, subset: Iterable[VertexId]) -> list[list[VertexId]]:
    """Connected components of the subgraph induced by ``subset``, each sorted."""
    remaining = {g.check_vertex(v) for v in subset}
    comps = []
    for v in sorted(remaining, key=g.sort_key):
        if v not in remaining:
            continue
        remaining.discard(v)
        comp = [v]
        queue = deque([v])
        while queue:
            u = queue.popleft()
            for w in g.neighbors(u):
                if w in remaining:
                    remaining.discard(w)
                    comp.append(w)
                    queue.append(w)
        comps.append(sorted(comp, key=g.sort_key))
    return comps
