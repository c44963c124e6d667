import itertools
import json

import pytest

import oracles as O
from instances import SEVEN_HOLE, SEVEN_TS, vid
from peermech.errors import GuardExceeded, PeerMechError
from peermech.fgraph import (
    VertexId,
    build_graph,
    canonical_hole,
    complement_has_odd_hole,
    components_of,
    find_odd_holes,
    format_vertex,
    is_odd_hole,
    parse_vertex,
)

SHAPES = [(2, 2), (3, 2), (2, 2, 2), (2, 2, 3), (3, 3), (2, 3, 3)]


def ts_of(shape):
    return [list(range(k)) for k in shape]


@pytest.mark.parametrize("shape", SHAPES)
def test_counts(shape):
    g = build_graph(ts_of(shape))
    n = len(shape)
    expected_v = sum(
        eval("*".join(str(shape[j]) for j in range(n) if j != i) or "1") for i in range(n)
    )
    assert len(g) == expected_v
    assert g.num_cliques == len(list(itertools.product(*ts_of(shape))))
    for clique in g.cliques():
        assert len(clique) == n


def test_named_counts():
    g = build_graph([["a", "b"], ["a", "b"], ["a", "b", "c"]])
    assert (len(g), g.num_cliques) == (16, 12)
    g = build_graph([["a", "b"], ["a", "b"]])
    assert (len(g), g.num_cliques) == (4, 4)
    g = build_graph([["a", "b"]] * 3)
    assert (len(g), g.num_cliques) == (12, 8)


def test_build_errors():
    with pytest.raises(PeerMechError):
        build_graph([[0, 1]])
    with pytest.raises(PeerMechError):
        build_graph([[0], [0, 1]])


@pytest.mark.parametrize("shape", [(2, 2), (3, 2), (2, 2, 2), (2, 2, 3)])
def test_adjacency_matches_definition(shape):
    ts = ts_of(shape)
    g = build_graph(ts)
    vs, adj = O.adjacency(ts)
    for v in vs:
        for w in vs:
            assert g.adjacent(vid(v), vid(w)) == (w in adj[v])


@pytest.mark.parametrize("shape", [(2, 2), (2, 2, 2), (2, 2, 3), (3, 3)])
def test_adjacent_pairs_share_exactly_one_clique(shape):
    g = build_graph(ts_of(shape))
    cliques = [set(c) for c in g.cliques()]
    for v in g.vertices:
        for w in g.neighbors(v):
            assert sum(1 for c in cliques if v in c and w in c) == 1
            assert g.shared_profile(v, w) is not None
    for a, b in itertools.combinations(cliques, 2):
        assert len(a & b) <= 1


def test_adjacency_examples(seven_graph):
    g = build_graph([[0, 1]] * 3)
    assert g.adjacent(VertexId(0, (0, 0)), VertexId(1, (1, 0)))
    assert g.adjacent(VertexId(0, (0, 0)), VertexId(2, (0, 0)))
    assert not g.adjacent(VertexId(0, (0, 0)), VertexId(0, (1, 0)))
    assert not g.adjacent(VertexId(0, (0, 0)), VertexId(0, (0, 0)))
    with pytest.raises(PeerMechError):
        g.adjacent(VertexId(0, (0, 5)), VertexId(1, (0, 0)))


def test_clique_of_profile():
    g = build_graph([[0, 1]] * 3)
    assert set(g.clique_of_profile((0, 0, 0))) == {VertexId(0, (0, 0)), VertexId(1, (0, 0)), VertexId(2, (0, 0))}
    g2 = build_graph([["a", "b"], ["a", "b"]])
    assert set(g2.clique_of_profile(("a", "b"))) == {VertexId(0, ("b",)), VertexId(1, ("a",))}


def test_seven_hole_found(seven_graph):
    hole = [vid(v) for v in SEVEN_HOLE]
    assert is_odd_hole(seven_graph, hole)
    holes = find_odd_holes(seven_graph, max_len=7)
    assert canonical_hole(seven_graph, hole) in holes
    for h in holes:
        assert len(h) == 7 and is_odd_hole(seven_graph, list(h))
    assert len(set(holes)) == len(holes)


def test_first_only(seven_graph):
    assert len(find_odd_holes(seven_graph, max_len=7, first_only=True)) == 1


def test_canonical_rotation_invariant(seven_graph):
    hole = [vid(v) for v in SEVEN_HOLE]
    c = canonical_hole(seven_graph, hole)
    for k in range(7):
        rot = hole[k:] + hole[:k]
        assert canonical_hole(seven_graph, rot) == c
        assert canonical_hole(seven_graph, rot[::-1]) == c
    assert seven_graph.sort_key(c[1]) < seven_graph.sort_key(c[-1])


@pytest.mark.parametrize("shape", SHAPES)
def test_no_five_holes(shape):
    g = build_graph(ts_of(shape))
    assert find_odd_holes(g, max_len=5) == []


def test_binary_graphs_have_no_holes():
    for shape in [(2, 2), (2, 2, 2), (2, 2, 2, 2)]:
        g = build_graph(ts_of(shape))
        assert find_odd_holes(g, max_len=9) == []


def test_two_agent_graph_bipartite():
    g = build_graph(ts_of((3, 4)))
    assert find_odd_holes(g, max_len=11) == []


@pytest.mark.parametrize("shape", [(2, 2), (2, 2, 2), (2, 2, 3)])
def test_complement_has_no_odd_hole(shape):
    assert complement_has_odd_hole(build_graph(ts_of(shape))) == []


def test_hole_search_guard():
    g = build_graph(ts_of((3, 3, 3)))
    with pytest.raises(GuardExceeded):
        find_odd_holes(g, max_len=7, guard=10)


def test_components(seven_graph):
    hole = [vid(v) for v in SEVEN_HOLE]
    comps = components_of(seven_graph, hole)
    assert len(comps) == 1 and len(comps[0]) == 7
    assert components_of(seven_graph, []) == []
    a, b = VertexId(0, (0, 0)), VertexId(0, (1, 1))
    assert not seven_graph.adjacent(a, b)
    assert sorted(map(len, components_of(seven_graph, [a, b]))) == [1, 1]


def test_vertex_text_roundtrip():
    ts = SEVEN_TS
    v = VertexId(2, (1, 0))
    assert format_vertex(v) == "2:(1,0)"
    assert parse_vertex("2:(1,0)", ts) == v
    with pytest.raises(PeerMechError):
        parse_vertex("garbage", ts)


def test_exports(seven_graph):
    data = json.loads(seven_graph.export_json())
    assert len(data["vertices"]) == 16
    dot = seven_graph.to_dot()
    assert dot.startswith("graph") and "--" in dot
