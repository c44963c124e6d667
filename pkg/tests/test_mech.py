import itertools
import json
import random
from fractions import Fraction

import pytest

import oracles as O
from instances import RANDOM_CASES, SEVEN_HOLE, JURY2_ROWS, JURY2_TS, random_rows, to_env, vid
from peermech.errors import PeerMechError
from peermech.fgraph import VertexId, build_graph
from peermech.mech import (
    MAY,
    MUST,
    Mechanism,
    RankContext,
    check_feasible,
    constant_mechanism,
    informational_size_profile,
    is_jury,
    jury_mechanism_for,
    jury_value,
    mechanism_from_json,
    rank_table,
    ranking_mechanism,
    ranking_utility,
    utility,
    utility_from_weights,
)

HALF = Fraction(1, 2)


def hole_mech(ts):
    return Mechanism(ts, {vid(v): HALF for v in SEVEN_HOLE}, MAY)


def test_hole_mechanism_feasible_and_worth_seven_halves(seven_graph, seven_weights):
    m = hole_mech(seven_graph.type_spaces)
    assert check_feasible(seven_graph, m)
    assert utility(seven_weights, m) == Fraction(7, 2)


def test_adjacent_ones_infeasible(seven_graph):
    v, w = VertexId(0, (0, 0)), VertexId(1, (1, 0))
    m = Mechanism(seven_graph.type_spaces, {v: 1, w: 1}, MAY)
    res = check_feasible(seven_graph, m)
    assert not res
    assert res.violated_profile == seven_graph.shared_profile(v, w)
    assert res.load == 2


def test_uniform_must_allocate_feasible(seven_graph):
    q = {v: Fraction(1, 3) for v in seven_graph.vertices}
    assert check_feasible(seven_graph, Mechanism(seven_graph.type_spaces, q, MUST))
    assert not check_feasible(seven_graph, Mechanism(seven_graph.type_spaces, {}, MUST))


def test_mechanism_validation():
    with pytest.raises(PeerMechError):
        Mechanism([[0, 1], [0, 1]], {VertexId(0, (0,)): Fraction(3, 2)}, MAY)
    with pytest.raises(PeerMechError):
        Mechanism([[0, 1], [0, 1]], {}, "sometimes")
    with pytest.raises(PeerMechError):
        Mechanism([[0, 1], [0, 1]], {VertexId(0, (7,)): HALF}, MAY)


def test_zero_mechanism_utility(b1):
    assert utility(b1, Mechanism(b1.type_spaces, {}, MAY)) == 0


def test_mechanism_json_roundtrip(seven_graph):
    m = hole_mech(seven_graph.type_spaces)
    back = mechanism_from_json(json.loads(json.dumps(m.to_json())))
    assert back == m
    assert mechanism_from_json({"mode": MAY, "entries": []}, seven_graph.type_spaces).q == {}


@pytest.mark.parametrize("seed,shape", RANDOM_CASES)
def test_utility_routes_agree(seed, shape):
    ts, rows = random_rows(seed, shape)
    env = to_env(ts, rows)
    rng = random.Random(seed)
    g = build_graph(ts)
    for _ in range(20):
        q = {v: Fraction(rng.randint(0, 4), 4 * len(shape)) for v in g.vertices}
        m = Mechanism(ts, q, MAY)
        direct = sum(
            (p * m[VertexId(i, O.minus(th, i))] * O.peer_value(rows, i, O.minus(th, i)) for th, p, _ in rows for i in range(len(ts))),
            Fraction(0),
        )
        assert utility(env, m) == direct == utility_from_weights(env.weights(), m)


def test_ranks_with_all_equal_values():
    env = to_env([[0, 1]] * 3, [((0, 0, 0), 1, [0, 0, 0])])
    ctx = RankContext(env)
    assert ctx.ranks((0, 0, 0)) == (Fraction(1, 3), Fraction(2, 3), Fraction(1))


def test_b1_rank_facts(b1):
    table = rank_table(b1)
    for row in table.rows:
        for i in range(3):
            if row.peer_values[i] == 1:
                assert row.robust_ranks[i] <= Fraction(2, 3)
            else:
                assert row.ranks[i] == 1
        assert row.delta <= Fraction(2, 3)


@pytest.mark.parametrize("seed,shape", RANDOM_CASES)
def test_rank_table_matches_oracle(seed, shape, frozen):
    ts, rows = random_rows(seed, shape)
    env = to_env(ts, rows)
    table = rank_table(env)
    for row in table.rows:
        pv = O.peer_values_at(rows, row.theta)
        assert list(row.peer_values) == pv
        assert list(row.ranks) == O.ranks(pv)
        assert sorted(row.ranks) == [Fraction(k, len(ts)) for k in range(1, len(ts) + 1)]
        for i in range(len(ts)):
            assert row.robust_ranks[i] == O.robust_rank(rows, ts, i, row.theta)
            assert row.robust_ranks[i] >= row.ranks[i]
        assert row.delta == O.informational_size(rows, ts, row.theta)
        assert 0 <= row.delta <= Fraction(len(ts) - 1, len(ts))
    entry = next(e for e in frozen["random"] if e["seed"] == seed)
    assert informational_size_profile(env).max == Fraction(entry["max_delta"])


def test_rank_table_csv(b1):
    text = rank_table(b1).to_csv()
    head = text.splitlines()[0]
    assert head == "theta,agent,peer_value,rank,robust_rank,delta"
    assert len(text.splitlines()) == 1 + 9 * 3


def test_b1_ranking_mechanism(b1):
    m = ranking_mechanism(b1, Fraction(2, 3))
    g = build_graph(b1.type_spaces)
    assert check_feasible(g, m)
    assert utility(b1, m) == 1
    ctx = RankContext(b1)
    for e in b1.support:
        winners = [i for i in range(3) if m[VertexId(i, O.minus(e.theta, i))] > 0]
        assert len(winners) == 2
        assert all(m[VertexId(i, O.minus(e.theta, i))] == HALF for i in winners)
        assert all(ctx.peer_values(e.theta)[i] == 1 for i in winners)


def test_group2_ranking_gives_quarter(group2):
    m = ranking_mechanism(group2, Fraction(2, 3))
    for e in group2.support:
        got = [m[VertexId(i, O.minus(e.theta, i))] for i in range(6)]
        assert sorted(got) == [0, 0] + [Fraction(1, 4)] * 4


def test_small_threshold_gives_zero(b1):
    assert ranking_mechanism(b1, Fraction(1, 4)).q == {}
    with pytest.raises(PeerMechError):
        ranking_mechanism(b1, 1)


@pytest.mark.parametrize("seed,shape", RANDOM_CASES)
def test_ranking_utility_matches_oracle(seed, shape, frozen):
    ts, rows = random_rows(seed, shape)
    env = to_env(ts, rows)
    entry = next(e for e in frozen["random"] if e["seed"] == seed)
    g = build_graph(ts)
    for p, expected in entry["ranking"].items():
        m = ranking_mechanism(env, Fraction(p))
        assert check_feasible(g, m)
        assert all(0 <= x <= 1 for x in m.q.values())
        assert utility(env, m) == ranking_utility(env, Fraction(p)) == Fraction(expected)


def test_jury2_mechanisms(jury2, frozen):
    m = jury_mechanism_for(jury2, [1], MAY)
    assert utility(jury2, m) == Fraction(frozen["jury2"]["jury_1"]) == HALF
    assert m[VertexId(0, ("H",))] == 1 and m[VertexId(0, ("L",))] == 0
    ok, jurors = is_jury(m)
    assert ok and jurors == (1,)
    m0 = jury_mechanism_for(jury2, [], MAY)
    assert utility(jury2, m0) == Fraction(frozen["jury2"]["jury_empty"]) == 0


def test_b1_single_jurors(b1, frozen):
    for j, expected in enumerate(frozen["b1"]["single_juror_may"]):
        assert jury_value(b1, [j], MAY) == Fraction(expected) <= Fraction(2, 3)


def test_must_allocate_jury_rules(b1):
    with pytest.raises(PeerMechError):
        jury_mechanism_for(b1, [0, 1, 2], MUST)
    m = jury_mechanism_for(b1, [0], MUST)
    assert check_feasible(build_graph(b1.type_spaces), m)
    assert m.mode == MUST


def test_jury_off_support_behaviour():
    env = to_env([[0, 1], [0, 1], [0, 1]], [((0, 0, 0), 1, [1, Fraction(1, 2), 0])])
    may = jury_mechanism_for(env, [2], MAY)
    must = jury_mechanism_for(env, [2], MUST)
    # juror report 1 never happens
    assert may[VertexId(0, (0, 1))] == 0 and may[VertexId(1, (0, 1))] == 0
    assert must[VertexId(0, (0, 1))] == 1 and must[VertexId(0, (1, 1))] == 1


def test_jury_allocates_at_zero_and_breaks_ties_low():
    env = to_env([[0, 1], [0, 1], [0, 1]], [((0, 0, 0), 1, [0, 0, -1])])
    m = jury_mechanism_for(env, [2], MAY)
    assert m[VertexId(0, (0, 0))] == 1
    assert m[VertexId(1, (0, 0))] == 0


@pytest.mark.parametrize("seed,shape", [(0, (2, 2)), (1, (3, 2)), (4, (2, 2, 2))])
def test_jury_rule_dominates_all_selections(seed, shape):
    ts, rows = random_rows(seed, shape)
    env = to_env(ts, rows)
    n = len(ts)
    for r in range(n):
        for jurors in itertools.combinations(range(n), r):
            for mode, withhold in ((MAY, True), (MUST, False)):
                m = jury_mechanism_for(env, jurors, mode)
                assert is_jury(m)[0]
                best = O.jury_by_selection_search(rows, ts, list(jurors), withhold)
                assert utility(env, m) == best == jury_value(env, jurors, mode)


def test_is_jury_rejects_hole_mechanism(seven_graph):
    ok, _ = is_jury(hole_mech(seven_graph.type_spaces))
    assert not ok


def test_constant_mechanism_is_jury(b1):
    m = constant_mechanism(b1.type_spaces, 1, MUST)
    ok, jurors = is_jury(m)
    assert ok and jurors == (0, 2)
    assert utility(b1, m) == b1.expected_value(1)


def test_informational_size_profile(b1):
    prof = informational_size_profile(b1)
    assert prof.max <= Fraction(2, 3)
    assert prof.mass_above(prof.max) == 0
    assert prof.mass_above(-1) == 1
    cdf = prof.cdf()
    assert cdf[-1][1] == 1


def test_no_influence_means_zero_delta():
    rows = [((a, b), Fraction(1, 4), [Fraction(1, 2), Fraction(-1, 2)]) for a in (0, 1) for b in (0, 1)]
    env = to_env([[0, 1], [0, 1]], rows)
    assert informational_size_profile(env).max == 0


def test_jury2_plain_rows_consistent(jury2):
    assert O.rows_of(jury2) == [(th, p, u) for th, p, u in JURY2_ROWS]
    assert jury2.type_spaces == tuple(tuple(t) for t in JURY2_TS)
