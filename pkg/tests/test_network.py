import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bnmpe.network import (Evaluator, Evidence, Network, NodeSpec, cyclomatic_number,
                           joint_probability, log_joint_probability, state_space_size,
                           topological_order, undirected_skeleton, validate_network)

from conftest import BN1_OPTIMUM, BN1_OPTIMUM_P, brute_force, chain, no_arc_network, random_small_network


def test_bn1_validates_clean(net_bn1):
    assert validate_network(net_bn1) == []


def test_two_node_cycle_is_reported():
    net = Network("cyc", [
        NodeSpec("A", 2, ("B",), np.full((2, 2), 0.5)),
        NodeSpec("B", 2, ("A",), np.full((2, 2), 0.5)),
    ])
    kinds = [v.kind for v in validate_network(net)]
    assert "cycle" in kinds


def test_unnormalized_row_names_node_and_parent_tuple():
    net = Network("bad", [
        NodeSpec("A", 2, (), [0.5, 0.5]),
        NodeSpec("B", 2, ("A",), [[0.5, 0.6], [0.5, 0.5]]),
    ])
    report = validate_network(net)
    assert len(report) == 1
    assert report[0].kind == "normalization"
    assert "'B'" in report[0].message and "A=1" in report[0].message


@pytest.mark.parametrize("nodes, kind", [
    ([NodeSpec("A", 2, ("Z",), np.full((2, 2), 0.5))], "parent"),
    ([NodeSpec("A", 2, ("A",), np.full((2, 2), 0.5))], "parent"),
    ([NodeSpec("A", 2, (), [0.5, 0.5]), NodeSpec("A", 2, (), [0.5, 0.5])], "duplicate"),
    ([NodeSpec("A", 2, (), [0.5, 0.3, 0.2])], "shape"),
    ([NodeSpec("A", 2, (), [1.5, -0.5])], "normalization"),
])
def test_structural_violations(nodes, kind):
    assert kind in [v.kind for v in validate_network(Network("x", nodes))]


def test_duplicate_parent_reported():
    net = Network("x", [NodeSpec("A", 2, (), [0.5, 0.5]),
                        NodeSpec("B", 2, ("A", "A"), np.full((2, 2, 2), 0.5))])
    assert "parent" in [v.kind for v in validate_network(net)]


def test_single_root_prior():
    net = no_arc_network([[0.6, 0.3, 0.1]])
    assert joint_probability(net, (0,)) == pytest.approx(0.6)


def test_deterministic_tables_consistent_assignment_is_one():
    net = Network("det", [
        NodeSpec("A", 2, (), [1.0, 0.0]),
        NodeSpec("B", 2, ("A",), [[0.0, 1.0], [1.0, 0.0]]),
    ])
    assert joint_probability(net, (0, 1)) == 1.0
    assert log_joint_probability(net, (0, 1)) == 0.0
    assert joint_probability(net, (0, 0)) == 0.0
    assert log_joint_probability(net, (0, 0)) == -math.inf


def test_bn1_optimum_value(net_bn1):
    assert joint_probability(net_bn1, BN1_OPTIMUM) == pytest.approx(BN1_OPTIMUM_P, rel=1e-12)


def test_bn1_published_assignment_under_shipped_tables(net_bn1):
    # the published optimum, read with the shipped tables: a hand product of its 13 factors
    published = tuple(v - 1 for v in (1, 2, 2, 1, 1, 1, 1, 2, 1, 1, 1, 1, 1))
    factors = [0.6, 0.99, 0.9, 0.9, 0.95, 0.9, 0.1, 0.8, 0.85, 0.9, 0.7, 0.75, 0.99]
    assert joint_probability(net_bn1, published) == pytest.approx(math.prod(factors), rel=1e-12)


def test_log_joint_two_factors():
    net = no_arc_network([[0.5, 0.5], [0.5, 0.5]])
    assert log_joint_probability(net, (1, 0)) == pytest.approx(math.log(0.25), rel=1e-15)


def test_log_joint_matches_linear_on_bn1(net_bn1):
    lp = log_joint_probability(net_bn1, BN1_OPTIMUM)
    assert math.exp(lp) == pytest.approx(joint_probability(net_bn1, BN1_OPTIMUM), rel=1e-9)


def test_dimension_mismatch_raises(net_bn1):
    with pytest.raises(ValueError):
        joint_probability(net_bn1, (0, 1))
    with pytest.raises(ValueError):
        log_joint_probability(net_bn1, (0,) * 14)
    with pytest.raises(ValueError):
        joint_probability(net_bn1, (3,) + (0,) * 12)


def test_state_space_sizes(net_bn1):
    assert state_space_size(net_bn1) == 12_288
    assert state_space_size(no_arc_network([[0.5, 0.5]] * 15 + [[0.2, 0.3, 0.5]] * 5)) == 7_962_624
    assert state_space_size(no_arc_network([[0.5, 0.5]])) == 2


def test_state_space_size_is_exact_beyond_64_bits():
    net = no_arc_network([[0.5, 0.5]] * 70)
    assert state_space_size(net) == 2**70


def test_skeleton_bn1(net_bn1):
    adj = undirected_skeleton(net_bn1)
    assert sum(len(s) for s in adj) // 2 == 12
    assert cyclomatic_number(net_bn1) == 0
    assert all(j in adj[i] for i, s in enumerate(adj) for j in s)


def test_skeleton_edge_cases():
    assert all(not s for s in undirected_skeleton(no_arc_network([[0.5, 0.5]] * 4)))
    net = chain(3)
    assert undirected_skeleton(net)[net.index("B")] == {net.index("A"), net.index("C")}


def test_batch_matches_scalar(net_bn1, rng):
    rows = np.array([[int(rng.integers(k)) for k in net_bn1.state_counts] for _ in range(50)])
    batch = net_bn1.log_joint_batch(rows)
    scalar = [log_joint_probability(net_bn1, r) for r in rows]
    np.testing.assert_allclose(batch, scalar, rtol=1e-12)


def test_topological_order_respects_arcs(net_bn1):
    order = topological_order(net_bn1)
    pos = {v: i for i, v in enumerate(order)}
    for child, parents in enumerate(net_bn1.parent_indices):
        assert all(pos[p] < pos[child] for p in parents)


def test_evidence_resolution(net_bn1):
    assert Evidence({"7": 1, "8": 0}).resolve(net_bn1) == {6: 1, 7: 0}
    with pytest.raises(ValueError):
        Evidence({"1": 3}).resolve(net_bn1)
    with pytest.raises(ValueError):
        Evidence({"99": 0}).resolve(net_bn1)


def test_evaluator_counts(net_bn1):
    ev = Evaluator(net_bn1)
    ev(BN1_OPTIMUM)
    ev.batch(np.zeros((4, 13), dtype=int))
    assert ev.count == 5


def test_network_is_immutable(net_bn1):
    with pytest.raises(ValueError):
        net_bn1.nodes[0].cpt[0] = 1.0


# ---- properties ------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_joint_sums_to_one(seed):
    net = random_small_network(np.random.default_rng(seed), zeros=seed % 2 == 0)
    assert validate_network(net) == []
    total = math.fsum(p for _, p in brute_force(net))
    assert total == pytest.approx(1.0, abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_log_linear_consistency(seed):
    rng = np.random.default_rng(seed)
    net = random_small_network(rng, zeros=True)
    for _ in range(10):
        a = tuple(int(rng.integers(k)) for k in net.state_counts)
        p = joint_probability(net, a)
        lp = log_joint_probability(net, a)
        if p >= 1e-300:
            assert math.exp(lp) == pytest.approx(p, rel=1e-9)
        else:
            assert lp == -math.inf


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_renaming_nodes_preserves_joint(seed):
    rng = np.random.default_rng(seed)
    net = random_small_network(rng)
    rename = {n.id: f"x{rng.integers(10**9)}_{i}" for i, n in enumerate(net.nodes)}
    renamed = Network("r", [NodeSpec(rename[n.id], n.state_count,
                                     tuple(rename[p] for p in n.parents), n.cpt)
                            for n in net.nodes])
    for _ in range(10):
        a = tuple(int(rng.integers(k)) for k in net.state_counts)
        assert joint_probability(renamed, a) == joint_probability(net, a)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_state_space_matches_iteration(seed):
    net = random_small_network(np.random.default_rng(seed))
    assert state_space_size(net) == len(brute_force(net))
