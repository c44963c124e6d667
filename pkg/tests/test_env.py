import json
from fractions import Fraction

import pytest

import oracles as O
from instances import B1_HOLE, JURY2_ROWS, RANDOM_CASES, b1_rows, random_rows, to_env
from peermech.env import (
    Environment,
    SupportEntry,
    WeightVector,
    environment_from_json,
    load_environment,
    load_instance,
    parse_rational,
    validate,
    weights_from_json,
)
from peermech.errors import InvalidEnvironment, PeerMechError
from peermech.fgraph import VertexId


def test_parse_rational_forms():
    assert parse_rational("1/3") == Fraction(1, 3)
    assert parse_rational("0.25") == Fraction(1, 4)
    assert parse_rational(2) == 2
    with pytest.raises(PeerMechError):
        parse_rational("abc")


def test_load_b1_from_text(b1):
    env = load_environment(json.dumps(b1.to_json()))
    assert env.n == 3
    assert len(env.support) == 9
    assert all(e.prob == Fraction(1, 9) for e in env.support)


def test_probabilities_must_sum_to_one():
    data = {"agents": 2, "type_spaces": [[0, 1], [0, 1]], "support": [
        {"theta": [0, 0], "prob": "1/2", "values": ["0", "0"]},
        {"theta": [1, 1], "prob": "1/3", "values": ["0", "0"]},
    ]}
    with pytest.raises(InvalidEnvironment, match="not summing to 1"):
        environment_from_json(data)


def test_value_out_of_range():
    data = {"agents": 2, "type_spaces": [[0, 1], [0, 1]], "support": [
        {"theta": [0, 0], "prob": "1", "values": ["1.5", "0"]},
    ]}
    with pytest.raises(InvalidEnvironment, match="out of range"):
        environment_from_json(data)


def test_duplicate_profile_and_small_type_space():
    env = Environment(2, ((0,), (0, 1)), (SupportEntry((0, 0), Fraction(1, 2), (0, 0)), SupportEntry((0, 0), Fraction(1, 2), (0, 0))))
    problems = validate(env)
    assert any("duplicate profile" in p for p in problems)
    assert any("type space too small" in p for p in problems)


def test_single_agent_rejected():
    env = Environment(1, ((0, 1),), (SupportEntry((0,), Fraction(1), (0,)),))
    assert "n < 2" in validate(env)


def test_unknown_label_rejected():
    data = {"agents": 2, "type_spaces": [[0, 1], [0, 1]], "support": [{"theta": [0, 7], "prob": "1", "values": ["0", "0"]}]}
    with pytest.raises(InvalidEnvironment, match="not in its type space"):
        environment_from_json(data)


def test_parse_failures():
    with pytest.raises(PeerMechError, match="parse failure"):
        environment_from_json({"agents": 2})
    with pytest.raises(PeerMechError):
        load_instance('{"agents": 2, "type_spaces": []}')
    with pytest.raises(PeerMechError):
        load_instance("not json")


def test_b1_valid(b1):
    assert validate(b1) == []


def test_b1_peer_values_are_hole_indicator(b1):
    hole = {VertexId(i, t) for i, t in B1_HOLE}
    for i in range(3):
        for a in (1, 2, 3):
            for b in (1, 2, 3):
                v = VertexId(i, (a, b))
                assert b1.peer_value(i, (a, b)) == (1 if v in hole else 0)


def test_b1_weights(b1, frozen):
    w = b1.weights()
    positive = sorted(f"{v.agent}:{v.theta_minus}" for v, x in w.values.items() if x > 0)
    assert positive == frozen["b1"]["positive_weight_vertices"]
    assert all(x == Fraction(frozen["b1"]["hole_weight"]) for x in w.values.values())


def test_jury2_values(jury2, frozen):
    assert jury2.peer_value(0, ("H",)) == 1
    assert jury2.peer_value(0, ("L",)) == -1
    w = jury2.weights()
    for key, x in frozen["jury2"]["weights"].items():
        agent, rest = key.split(":", 1)
        v = VertexId(int(agent), eval(rest))
        assert w[v] == Fraction(x)
    assert jury2.conditional_value(0, [1], ("H",)) == 1
    assert jury2.conditional_value(0, [], ()) == 0


def test_conditional_value_rejects_juror_candidate(jury2):
    with pytest.raises(PeerMechError):
        jury2.conditional_value(1, [1], ("H",))


def test_off_support_conventions():
    env = to_env([[0, 1], [0, 1]], [((0, 0), 1, [1, 1])])
    assert env.peer_value(0, (1,)) == 0
    assert env.conditional_value(0, [1], (1,)) == 0
    env2 = Environment(env.n, env.type_spaces, env.support, {VertexId(0, (1,)): Fraction(1, 2)}).ensure_valid()
    assert env2.peer_value(0, (1,)) == Fraction(1, 2)
    assert env2.weights().values == env.weights().values
    back = environment_from_json(env2.to_json())
    assert back.off_support == env2.off_support


def test_off_support_entry_must_have_zero_mass():
    env = to_env([[0, 1], [0, 1]], [((0, 0), 1, [1, 1])])
    bad = Environment(env.n, env.type_spaces, env.support, {VertexId(0, (0,)): Fraction(1)})
    assert any("positive marginal mass" in p for p in validate(bad))


def test_unknown_agent_or_label(b1):
    with pytest.raises(PeerMechError):
        b1.peer_value(5, (1, 1))
    with pytest.raises(PeerMechError):
        b1.peer_value(0, (1, 9))


@pytest.mark.parametrize("seed,shape", RANDOM_CASES)
def test_peer_values_and_weights_match_oracle(seed, shape):
    ts, rows = random_rows(seed, shape)
    env = to_env(ts, rows)
    w = env.weights()
    for i, tm in O.vertices(ts):
        assert env.peer_value(i, tm) == O.peer_value(rows, i, tm)
        assert w[VertexId(i, tm)] == O.weight(rows, i, tm)
        assert env.marginal(i, tm) * env.peer_value(i, tm) == O.weight(rows, i, tm)


def test_weight_file_roundtrip(seven_weights):
    back = weights_from_json(seven_weights.to_json())
    assert back.values == seven_weights.values
    assert isinstance(load_instance(json.dumps(seven_weights.to_json())), WeightVector)


def test_environment_roundtrip(group2):
    back = environment_from_json(json.loads(json.dumps(group2.to_json())))
    assert back == group2
    assert back.off_support == group2.off_support


def test_plain_b1_matches_generator(b1):
    _, rows = b1_rows(1)
    assert O.rows_of(b1) == rows


def test_expected_value(jury2):
    assert jury2.expected_value(0) == 0
    assert sum(r[1] for r in JURY2_ROWS) == 1
