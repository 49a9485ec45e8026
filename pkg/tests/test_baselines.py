import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bnmpe.baselines import (CapExceeded, allele_distance, ball_size, enumerate_top_k,
                             greedy_ascent, greedy_restarts, local_refine, random_assignment,
                             random_search)
from bnmpe.io import bn4_like_spec, generate_random_network
from bnmpe.network import NO_EVIDENCE, Evaluator, Evidence, joint_probability, log_joint_probability

from conftest import (BN1_OPTIMUM, BN1_OPTIMUM_P, BN1_TOP100_MASS, brute_force, chain,
                      no_arc_network, random_small_network)


def test_bn1_top1(net_bn1):
    ranked = enumerate_top_k(net_bn1, k=1)
    assert ranked.visited == 12_288
    assert ranked.assignments == [BN1_OPTIMUM]
    assert ranked.probabilities[0] == pytest.approx(BN1_OPTIMUM_P, rel=1e-12)
    assert ranked.total_mass == pytest.approx(1.0, abs=1e-9)


def test_bn1_top100_mass(net_bn1):
    ranked = enumerate_top_k(net_bn1, k=100)
    assert ranked.cumulative_mass[-1] == pytest.approx(BN1_TOP100_MASS, rel=1e-12)


def test_bn1_matches_brute_force_ordering(net_bn1):
    oracle = brute_force(net_bn1)
    ranked = enumerate_top_k(net_bn1, k=200)
    # BN1 has exact ties that float rounding may order either way, so compare
    # probabilities rank by rank and check each listed assignment's own value
    np.testing.assert_allclose(ranked.probabilities, [p for _, p in oracle[:200]], rtol=1e-12)
    exact = dict(oracle)
    for a, p in zip(ranked.assignments, ranked.probabilities):
        assert exact[a] == pytest.approx(p, rel=1e-12)
    assert len(set(ranked.assignments)) == 200


def test_single_node_top2():
    ranked = enumerate_top_k(no_arc_network([[0.6, 0.3, 0.1]]), k=2)
    assert ranked.assignments == [(0,), (1,)]
    np.testing.assert_allclose(ranked.probabilities, [0.6, 0.3])


def test_k_zero_reports_mass(net_bn1):
    ranked = enumerate_top_k(net_bn1, k=0)
    assert len(ranked) == 0
    assert ranked.total_mass == pytest.approx(1.0)


def test_ties_are_lexicographic():
    net = no_arc_network([[0.5, 0.5], [0.5, 0.5]])
    ranked = enumerate_top_k(net, k=4)
    assert ranked.assignments == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_evidence_restricts_space(net_bn1):
    ev = Evidence({"7": 1, "8": 0})
    ranked = enumerate_top_k(net_bn1, ev, k=10)
    assert ranked.visited == 12_288 // 4
    oracle = brute_force(net_bn1, {6: 1, 7: 0})
    np.testing.assert_allclose(ranked.probabilities, [p for _, p in oracle[:10]], rtol=1e-12)
    assert all(a[6] == 1 and a[7] == 0 for a in ranked.assignments)
    assert ranked.total_mass == pytest.approx(sum(p for _, p in oracle))


def test_cap(net_bn1):
    with pytest.raises(CapExceeded):
        enumerate_top_k(net_bn1, k=1, cap=1000)


def test_small_chunks_give_same_answer(net_bn1):
    assert enumerate_top_k(net_bn1, k=60, chunk=5).assignments == \
        enumerate_top_k(net_bn1, k=60).assignments


def test_rank_of(net_bn1):
    ranked = enumerate_top_k(net_bn1, k=10)
    assert ranked.rank_of(BN1_OPTIMUM) == 1
    assert ranked.rank_of((2,) * 1 + (1,) * 12) is None


def test_greedy_no_arcs_reaches_product_of_max_priors(rng):
    priors = [[0.2, 0.8], [0.6, 0.1, 0.3], [0.45, 0.55], [0.9, 0.1]]
    net = no_arc_network(priors)
    for _ in range(20):
        start = random_assignment(net, NO_EVIDENCE, rng)
        a = greedy_ascent(net, NO_EVIDENCE, start)
        assert a == (1, 0, 1, 0)
        assert joint_probability(net, a) == pytest.approx(math.prod(max(p) for p in priors))


def test_greedy_no_arcs_single_sweep_cost():
    net = no_arc_network([[0.2, 0.8], [0.6, 0.1, 0.3]])
    ev = Evaluator(net)
    greedy_ascent(net, NO_EVIDENCE, (0, 1), ev)
    # 1 for the start, (k-1) per gene in the improving sweep, again in the confirming sweep
    assert ev.count == 1 + 2 * (1 + 2)


def test_greedy_fixed_point_at_optimum(net_bn1):
    assert greedy_ascent(net_bn1, NO_EVIDENCE, BN1_OPTIMUM) == BN1_OPTIMUM


def test_greedy_respects_evidence(net_bn1, rng):
    ev = Evidence({"1": 2})
    start = random_assignment(net_bn1, ev, rng)
    assert greedy_ascent(net_bn1, ev, start)[0] == 2
    with pytest.raises(ValueError):
        greedy_ascent(net_bn1, ev, (0,) * 13)


def test_greedy_restarts_on_bn1_against_oracle(net_bn1):
    rng = np.random.default_rng(5)
    hits = 0
    for _ in range(50):
        start = random_assignment(net_bn1, NO_EVIDENCE, rng)
        hits += greedy_ascent(net_bn1, NO_EVIDENCE, start) == BN1_OPTIMUM
    # single-gene moves get stuck on BN1; the best of the restarts still finds the optimum
    assert 0 < hits < 50


def test_greedy_restarts_respects_budget(net_bn1):
    ev = Evaluator(net_bn1)
    greedy_restarts(net_bn1, NO_EVIDENCE, 200, np.random.default_rng(0), ev)
    assert 200 <= ev.count <= 200 + 2


def test_random_search_single_sample(net_bn1):
    a = random_search(net_bn1, NO_EVIDENCE, 1, np.random.default_rng(3))
    b = random_assignment(net_bn1, NO_EVIDENCE, np.random.default_rng(3))
    assert len(a) == 13
    assert all(0 <= v < k for v, k in zip(a, net_bn1.state_counts))
    assert a == random_search(net_bn1, NO_EVIDENCE, 1, np.random.default_rng(3))
    assert isinstance(b, tuple)


def test_random_search_counts_exactly(net_bn1):
    ev = Evaluator(net_bn1)
    random_search(net_bn1, NO_EVIDENCE, 1310, np.random.default_rng(0), ev)
    assert ev.count == 1310
    with pytest.raises(ValueError):
        random_search(net_bn1, NO_EVIDENCE, 0, np.random.default_rng(0))


def test_random_search_full_budget_is_legal(net_bn1):
    a = random_search(net_bn1, Evidence({"1": 0}), 12_288, np.random.default_rng(1))
    assert a[0] == 0


def test_distance_metrics():
    assert allele_distance((0, 2, 1), (2, 0, 1)) == 4
    assert allele_distance((0, 2, 1), (2, 0, 1), "hamming") == 2
    with pytest.raises(ValueError):
        allele_distance((0,), (1,), "euclid")


def test_refine_radius_zero(net_bn1):
    ev = Evaluator(net_bn1)
    center = (1,) * 13
    assert local_refine(net_bn1, NO_EVIDENCE, center, 0, evaluator=ev) == center
    assert ev.count == 1


def test_refine_saturated_ball_is_global(net_bn1):
    radius = sum(k - 1 for k in net_bn1.state_counts)
    assert local_refine(net_bn1, NO_EVIDENCE, (2,) + (1,) * 12, radius) == BN1_OPTIMUM


def test_refine_fifth_best_radius_two(net_bn1):
    oracle = brute_force(net_bn1)
    ranking = {a: i + 1 for i, (a, _) in enumerate(oracle)}
    center = oracle[4][0]
    refined = local_refine(net_bn1, NO_EVIDENCE, center, 2)
    # independent check: best point of the brute-forced radius-2 ball
    ball = [(a, p) for a, p in oracle if allele_distance(a, center) <= 2]
    assert refined == ball[0][0]
    assert ranking[refined] <= 5


def test_refine_hamming_ball(net_bn1):
    oracle = brute_force(net_bn1)
    center = oracle[30][0]
    refined = local_refine(net_bn1, NO_EVIDENCE, center, 1, metric="hamming")
    ball = [a for a, _ in oracle if allele_distance(a, center, "hamming") <= 1]
    assert refined == ball[0]


def test_ball_size_matches_enumeration(net_bn1):
    oracle = brute_force(net_bn1)
    center = oracle[7][0]
    for r in range(4):
        expected = sum(1 for a, _ in oracle if allele_distance(a, center) <= r)
        assert ball_size(net_bn1, NO_EVIDENCE, center, r) == expected


def test_refine_cap(net_bn1):
    with pytest.raises(CapExceeded):
        local_refine(net_bn1, NO_EVIDENCE, BN1_OPTIMUM, 5, cap=10)


def test_refine_keeps_evidence(net_bn1):
    ev = Evidence({"7": 0})
    center = list(BN1_OPTIMUM)
    center[6] = 0
    out = local_refine(net_bn1, ev, center, 14)
    assert out[6] == 0
    assert out == enumerate_top_k(net_bn1, ev, k=1).assignments[0]


# ---- properties ------------------------------------------------------------

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_full_enumeration_lists_everything_once(seed):
    net = random_small_network(np.random.default_rng(seed))
    total = math.prod(net.state_counts)
    ranked = enumerate_top_k(net, k=total)
    assert len(set(ranked.assignments)) == total
    assert ranked.cumulative_mass[-1] == pytest.approx(1.0, abs=1e-6)
    assert np.all(np.diff(ranked.log_probabilities) <= 0)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_greedy_never_worse_than_start(seed):
    rng = np.random.default_rng(seed)
    net = random_small_network(rng, zeros=True)
    start = random_assignment(net, NO_EVIDENCE, rng)
    out = greedy_ascent(net, NO_EVIDENCE, start)
    assert log_joint_probability(net, out) >= log_joint_probability(net, start)


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_greedy_one_sweep_on_no_arc_networks(seed):
    net = generate_random_network(bn4_like_spec(seed))
    rng = np.random.default_rng(seed)
    target = enumerate_top_k(net, k=1).assignments[0]
    for _ in range(5):
        ev = Evaluator(net)
        assert greedy_ascent(net, NO_EVIDENCE, random_assignment(net, NO_EVIDENCE, rng), ev) == target
        sweep = sum(k - 1 for k in net.state_counts)
        assert ev.count <= 1 + 2 * sweep


@settings(max_examples=20, deadline=None)
@given(seeds, st.integers(0, 3), st.integers(0, 3))
def test_refine_monotone_in_radius(seed, r1, r2):
    r1, r2 = sorted((r1, r2))
    rng = np.random.default_rng(seed)
    net = random_small_network(rng)
    center = random_assignment(net, NO_EVIDENCE, rng)
    small = local_refine(net, NO_EVIDENCE, center, r1)
    large = local_refine(net, NO_EVIDENCE, center, r2)
    assert log_joint_probability(net, large) >= log_joint_probability(net, small)
