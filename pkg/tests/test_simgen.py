import itertools
import json
from fractions import Fraction

import pytest

import oracles as O
from instances import b1_rows, b1_local_off
from peermech.env import VertexId, drop, validate
from peermech.errors import GuardExceeded, PeerMechError
from peermech.mech import MAY, MUST, informational_size_profile, ranking_utility
from peermech.simgen import (
    B1_HOLE,
    CSV_COLUMNS,
    ExperimentConfig,
    derive_seed,
    empty_network,
    env_from_joint,
    estimate_regularity,
    gen_ci_env,
    gen_group_env,
    gen_network_env,
    gen_symmetric_env,
    jury_replication_check,
    random_structure,
    recipients_structure,
    ring,
    rows_to_csv,
    run_scaling_experiment,
    star,
    structure_from_json,
    suppliers_structure,
    symmetric_joint,
)
from peermech.solve import solve_lp, upper_bound

DATA = __import__("pathlib").Path(__file__).parent / "data"


def test_group_env_one_matches_instances(b1):
    env = gen_group_env(1)
    assert O.rows_of(env) == O.rows_of(b1)
    norm = lambda rows: sorted((tuple(th), p, tuple(u)) for th, p, u in rows)
    assert norm(O.rows_of(env)) == norm(b1_rows(1)[1])
    assert env.off_support == {}


def test_group_env_two_off_support(group2, frozen):
    assert len(group2.off_support) == 324
    assert all(x == 1 for x in group2.off_support.values())
    local = b1_local_off(2)
    for v, x in group2.off_support.items():
        assert local(v.agent, v.theta_minus) == x
    assert informational_size_profile(group2).max == Fraction(frozen["group2"]["max_delta"]) == Fraction(1, 3)
    plain = gen_group_env(2, local_off_support=False)
    assert informational_size_profile(plain).max == Fraction(frozen["group2"]["max_delta_zero_convention"])
    for env in (group2, plain):
        assert ranking_utility(env, Fraction(2, 3)) == 1 == upper_bound(env, MAY)


def test_group_env_errors():
    with pytest.raises(PeerMechError):
        gen_group_env(0)


def test_b1_hole_vertices_carry_value_one(b1):
    for v in B1_HOLE:
        assert b1.peer_value_at(v) == 1
    for e in b1.support:
        assert sum(b1.peer_value_at(VertexId(i, drop(e.theta, i))) for i in range(3)) == 2


def test_network_topologies():
    assert ring(4) == [[1, 3], [0, 2], [1, 3], [0, 2]]
    assert star(3) == [[1, 2], [0], [0]]
    assert empty_network(2) == [[], []]


@pytest.mark.parametrize("adj", [ring(3), star(3), ring(4)])
def test_network_env_valid_and_seeded(adj):
    uniform = gen_network_env(adj)
    assert validate(uniform) == []
    a = gen_network_env(adj, seed=3)
    b = gen_network_env(adj, seed=3)
    c = gen_network_env(adj, seed=4)
    assert a.to_json() == b.to_json()
    assert a.to_json() != c.to_json()
    assert sum(e.prob for e in a.support) == 1
    for i in range(len(adj)):
        assert len(a.type_spaces[i][0]) == len(adj[i])


def test_network_observe_own_and_errors():
    env = gen_network_env(empty_network(2), observe_own=True)
    # an agent that sees its own value has no information about it from peers
    assert all(env.peer_value_at(VertexId(0, (t,))) == 0 for t in env.type_spaces[1])
    with pytest.raises(PeerMechError):
        gen_network_env(empty_network(2))
    with pytest.raises(PeerMechError):
        gen_network_env([[1], []])
    with pytest.raises(PeerMechError):
        gen_network_env(ring(3), noise="3/2")
    with pytest.raises(PeerMechError):
        gen_network_env(ring(3), value_levels=("1", "1"))


def test_noiseless_network_reveals_values():
    env = gen_network_env(ring(3), noise=0)
    for e in env.support:
        for i in range(3):
            assert env.peer_value_at(VertexId(i, drop(e.theta, i))) == e.cond_values[i]
    assert upper_bound(env, MAY) == solve_lp(env, MAY).objective


def test_structures_and_json():
    s = random_structure(3, 1, "suppliers")
    back = structure_from_json(json.loads(json.dumps(s.to_json())))
    assert back.to_json() == s.to_json()
    assert back.exchangeable_suppliers
    r = random_structure(3, 1, "recipients")
    assert r.exchangeable_recipients and all(fi == r.f[0] for fi in r.f)
    with pytest.raises(PeerMechError):
        random_structure(3, 1, "weird")
    with pytest.raises(PeerMechError):
        structure_from_json({"f": []})


def test_structure_flags_are_checked():
    g = random_structure(3, 5, "general").to_json()
    g["exchangeable_suppliers"] = True
    with pytest.raises(PeerMechError):
        structure_from_json(g)
    with pytest.raises(PeerMechError):
        suppliers_structure([{"1": "1/2"}], [{1: {"a": 1}}], [("a",)])
    with pytest.raises(PeerMechError):
        recipients_structure({2: 1}, [{2: {"a": 1}}, {2: {"a": 1}}], [("a",), ("a",)])


def test_posterior_mean():
    s = suppliers_structure(
        [{-1: "1/2", 1: "1/2"}] * 2,
        [{-1: {"l": "3/4", "h": "1/4"}, 1: {"l": "1/4", "h": "3/4"}}] * 2,
        [("l", "h")] * 2,
    )
    assert s.posterior_mean(0, {1: "h"}) == Fraction(1, 2)
    assert s.posterior_mean(0, {}) == 0
    env = gen_ci_env(s, 2)
    assert env.peer_value_at(VertexId(0, (("h",),))) == Fraction(1, 2)


def test_ci_env_validation():
    s = random_structure(3, 2, "general")
    env = gen_ci_env(s, 3)
    assert validate(env) == []
    with pytest.raises(PeerMechError):
        gen_ci_env(s, 4)
    with pytest.raises(PeerMechError):
        gen_ci_env(s, 1)


@pytest.mark.parametrize("kind,seed", [("suppliers", 1), ("recipients", 2), ("suppliers", 9), ("recipients", 4)])
def test_replication_is_exact(kind, seed):
    rep = jury_replication_check(random_structure(4, seed, kind), 2)
    assert rep.case == kind
    assert rep.is_jury and rep.equal


def test_replication_needs_flag():
    with pytest.raises(PeerMechError):
        jury_replication_check(random_structure(4, 1, "general"), 2)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_symmetric_joint_is_permutation_invariant(seed):
    joint = symmetric_joint(3, (0, 1), seed)
    assert sum(joint.values()) == 1
    for (u, t), w in joint.items():
        for p in itertools.permutations(range(3)):
            key = (tuple(u[k] for k in p), tuple(t[k] for k in p))
            assert joint[key] == w
    env = gen_symmetric_env(3, (0, 1), seed)
    assert env_from_joint(3, [(0, 1)] * 3, joint).to_json() == env.to_json()
    e1 = sum(w * u[0] for (u, _), w in joint.items())
    assert all(env.expected_value(i) == e1 for i in range(3))


def test_symmetric_guard():
    with pytest.raises(GuardExceeded):
        symmetric_joint(6, (0, 1), 0)


def test_regularity(b1):
    reg = estimate_regularity(b1, "1/10")
    assert reg == {Fraction(1, 3): 1, Fraction(2, 3): 1, Fraction(1): 0}
    assert estimate_regularity(b1, 2, ["1"]) == {Fraction(1): 1}


def test_experiment_config():
    data = json.loads((DATA / "ring_config.json").read_text())
    c = ExperimentConfig.from_json(data)
    assert c.p_grid == ["1/2", "2/3"]
    with pytest.raises(PeerMechError):
        ExperimentConfig.from_json(dict(data, bogus=1))
    with pytest.raises(PeerMechError):
        ExperimentConfig("torus", [3], ["1/2"])
    assert derive_seed(0, "ring", 3, 0) == derive_seed(0, "ring", 3, 0) != derive_seed(1, "ring", 3, 0)


def test_experiment_runs_and_is_reproducible(tmp_path):
    data = json.loads((DATA / "ring_config.json").read_text())
    out = tmp_path / "rows.csv"
    c = ExperimentConfig.from_json(dict(data, output=str(out)))
    rows = run_scaling_experiment(c)
    assert [(r["n"], r["p"]) for r in rows] == [(3, "1/2"), (3, "2/3"), (4, "1/2"), (4, "2/3")]
    for r in rows:
        lb, ru = Fraction(r["analytic_lb"]), Fraction(r["ranking_utility"])
        lp, ub = Fraction(r["lp_value"]), Fraction(r["upper_bound"])
        assert lb <= ru <= lp <= ub
        assert Fraction(r["jury_value"]) <= lp
    text = out.read_text()
    assert text == rows_to_csv(rows)
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert run_scaling_experiment(ExperimentConfig.from_json(data), jobs=2) == rows


def test_group_experiment_row():
    c = ExperimentConfig("group", [3], ["2/3"])
    (row,) = run_scaling_experiment(c)
    assert row["ranking_utility"] == "1" == row["upper_bound"]
    assert row["max_delta"] == "2/3"


@pytest.mark.parametrize("n", [3, 4, 5])
def test_ring_informational_size_at_most_two_over_n(n):
    for seed in (None, 0, 1):
        env = gen_network_env(ring(n), seed=seed)
        assert informational_size_profile(env).max <= Fraction(2, n)
