"""
Tests for route construction: step distributions, rollouts and batches.

Usage:
    pytest test_decoder.py -v
"""

import numpy as np
import pytest

from src.errors import TrajectoryError
from src.models import DecodeConfig, DecodeMode, GenConfig, Instance, ProblemKind
from src.pipeline import decode_batch, generate, rollout, sparsify
from src.pipeline.decoder import RouteState, replay, step_distribution
from src.pipeline.sparse_graph import build_graph
from src.rng import substream


def random_heatmap(g, seed):
    return np.random.default_rng(seed).uniform(0.05, 0.95, size=g.n_edges)


def test_step_distribution_normalizes_scores():
    """Test that feasible edge scores 0.3 and 0.1 become probabilities 0.75 and 0.25"""
    inst = Instance(kind=ProblemKind.TSP, coords=[(0, 0), (1, 0), (0, 2)])
    g = sparsify(inst, k=2)
    scores = np.full(g.n_edges, 0.5)
    scores[g.edge_id(0, 1)] = 0.3
    scores[g.edge_id(0, 2)] = 0.1

    dist = step_distribution(RouteState(inst), scores, g)
    probs = dict(zip(dist.actions.nodes.tolist(), dist.probs.tolist()))

    assert probs[1] == pytest.approx(0.75), "Score 0.3 of 0.4 total should give 0.75"
    assert probs[2] == pytest.approx(0.25), "Score 0.1 of 0.4 total should give 0.25"


def test_step_distribution_temperature():
    """Test that the temperature exponentiates scores before normalization"""
    inst = Instance(kind=ProblemKind.TSP, coords=[(0, 0), (1, 0), (0, 2)])
    g = sparsify(inst, k=2)
    scores = np.full(g.n_edges, 0.5)
    scores[g.edge_id(0, 1)] = 0.3
    scores[g.edge_id(0, 2)] = 0.1

    dist = step_distribution(RouteState(inst), scores, g, temperature=0.5)
    probs = dict(zip(dist.actions.nodes.tolist(), dist.probs.tolist()))
    assert probs[1] == pytest.approx(0.9), "0.3^2 / (0.3^2 + 0.1^2) = 0.9"


def test_capacity_mask():
    """Test that a customer whose demand exceeds the remaining load is masked out"""
    inst = Instance(kind=ProblemKind.CVRP, coords=[(0, 0), (1, 0), (2, 0), (0, 1)],
                    demands=[0, 5, 5, 1], capacity=7)
    g = sparsify(inst, k=3)
    state = RouteState(inst)
    state.advance(1)

    dist = step_distribution(state, np.full(g.n_edges, 0.5), g)

    assert state.remaining == 2, "Remaining capacity should be 2"
    assert 2 not in dist.actions.nodes, "Customer with demand 5 should be masked"
    assert set(dist.actions.nodes.tolist()) == {0, 3}, "Depot and the small customer remain"


def test_single_feasible_action():
    """Test that a single feasible edge has probability 1"""
    inst = Instance(kind=ProblemKind.TSP, coords=[(0, 0), (1, 0), (0, 2)])
    g = sparsify(inst, k=2)
    state = RouteState(inst)
    state.advance(1)

    dist = step_distribution(state, np.full(g.n_edges, 0.5), g)
    assert dist.actions.nodes.tolist() == [2], "Only node 2 is left"
    assert dist.probs.tolist() == [1.0], "Single action should have probability 1"


def test_distance_fallback_when_stranded():
    """Test that the decoder falls back to all feasible nodes when the sparse neighbours are used up"""
    inst = Instance(kind=ProblemKind.TSP, coords=[(0, 0), (0.1, 0), (0.2, 0), (5, 5), (5.1, 5)])
    g = sparsify(inst, k=1)
    state = RouteState(inst)
    state.advance(1)
    state.advance(2)

    dist = step_distribution(state, np.full(g.n_edges, 0.5), g)
    assert dist.actions.is_fallback, "Sparse neighbours are visited, fallback expected"
    assert set(dist.actions.nodes.tolist()) == {3, 4}, "Fallback offers every unvisited node"
    assert dist.probs[dist.actions.nodes.tolist().index(3)] > 0.5, "Closer node should be likelier"


def test_greedy_square_tour(square_instance):
    """Test that greedy decoding on a uniform heatmap walks the square perimeter"""
    g = build_graph(square_instance)
    traj = rollout(square_instance, g, np.full(g.n_edges, 0.5), DecodeConfig(mode=DecodeMode.GREEDY))

    assert traj.nodes == [0, 1, 2, 3], "Ties should go to the lowest node index"
    assert traj.length == pytest.approx(4.0), "Perimeter of the unit square is 4"


def test_hybrid_zero_equals_greedy():
    """Test that hybrid decoding with P = 0 reproduces greedy for any seed"""
    inst = generate(GenConfig(n_customers=15, seed=3), ProblemKind.CVRP)
    g = build_graph(inst)
    heat = random_heatmap(g, 1)
    greedy = rollout(inst, g, heat, DecodeConfig(mode=DecodeMode.GREEDY))

    for seed in range(5):
        hybrid = rollout(inst, g, heat, DecodeConfig(mode=DecodeMode.HYBRID, hybrid_p=0.0, seed=seed))
        assert hybrid.nodes == greedy.nodes, f"P = 0 should be greedy (seed {seed})"


def test_hybrid_one_equals_sample():
    """Test that hybrid decoding with P = 1 reproduces sampling"""
    inst = generate(GenConfig(n_customers=12, seed=4), ProblemKind.TSP)
    g = build_graph(inst)
    heat = random_heatmap(g, 2)
    for seed in range(3):
        a = rollout(inst, g, heat, DecodeConfig(mode=DecodeMode.HYBRID, hybrid_p=1.0, seed=seed))
        b = rollout(inst, g, heat, DecodeConfig(mode=DecodeMode.SAMPLE, seed=seed))
        assert a.nodes == b.nodes, "P = 1 should be pure sampling"


def test_sample_frequencies_match_distribution():
    """Test that first-step sample frequencies match step_distribution within 4 sigma (N = 10000)"""
    inst = Instance(kind=ProblemKind.TSP, coords=[(0, 0), (1, 0), (0, 1.5), (-1.2, 0)])
    g = sparsify(inst, k=3)
    heat = np.array([0.2, 0.5, 0.8] * 4)[:g.n_edges]
    expected = step_distribution(RouteState(inst), heat, g)

    n = 10000
    counts = {int(v): 0 for v in expected.actions.nodes}
    cfg = DecodeConfig(mode=DecodeMode.SAMPLE)
    for i in range(n):
        traj = rollout(inst, g, heat, cfg, rng=substream(0, "frequency", i))
        counts[traj.nodes[1]] += 1

    for node, p in zip(expected.actions.nodes.tolist(), expected.probs):
        sigma = np.sqrt(n * p * (1 - p))
        assert abs(counts[node] - n * p) <= 4 * sigma, f"Node {node}: {counts[node]} vs expected {n * p:.0f}"


@pytest.mark.parametrize("kind", [ProblemKind.TSP, ProblemKind.CVRP])
@pytest.mark.parametrize("n", [10, 20])
def test_rollouts_always_feasible(kind, n):
    """
    Test that every rollout is a feasible solution.

    This validates:
    - TSP: a permutation of all nodes
    - CVRP: each customer once, load within capacity, depot at both ends
    """
    for seed in range(25):
        inst = generate(GenConfig(n_customers=n, seed=seed), kind)
        g = build_graph(inst)
        result = decode_batch(inst, g, random_heatmap(g, seed),
                              DecodeConfig(mode=DecodeMode.HYBRID, hybrid_p=0.5, n_rollouts=4, seed=seed))
        for traj in result.trajectories:
            traj.validate(inst)
            assert traj.length == pytest.approx(inst.route_length(traj.nodes)), "Length should be the route length"


@pytest.mark.slow
@pytest.mark.parametrize("kind", [ProblemKind.TSP, ProblemKind.CVRP])
@pytest.mark.parametrize("n", [10, 20, 50])
def test_rollout_feasibility_suite(kind, n):
    """
    Test feasibility over 10^4 rollouts in total (about 1700 per kind and size).

    Sparsity, temperature and hybrid P vary per instance so the distance
    fallback and depot returns are exercised. Every rollout must also
    replay step by step on its graph.
    """
    params = np.random.default_rng(n)
    for seed in range(100):
        inst = generate(GenConfig(n_customers=n, seed=1000 + seed), kind)
        g = build_graph(inst, int(params.choice([1, 2, 4])) if seed % 2 else None)
        cfg = DecodeConfig(
            mode=DecodeMode.HYBRID,
            hybrid_p=float(params.choice([0.0, 0.05, 0.5, 1.0])),
            n_rollouts=17,
            seed=seed,
            temperature=float(params.choice([0.5, 1.0, 2.0])),
        )
        for traj in decode_batch(inst, g, random_heatmap(g, seed), cfg).trajectories:
            traj.validate(inst)
            replay(inst, g, traj.nodes)


def test_step_logp_matches_recomputed_probabilities():
    """Test that exp(sum(step_logp)) equals the product of recomputed step probabilities"""
    inst = generate(GenConfig(n_customers=12, seed=8), ProblemKind.CVRP)
    g = build_graph(inst)
    heat = random_heatmap(g, 8)
    traj = rollout(inst, g, heat, DecodeConfig(mode=DecodeMode.SAMPLE, seed=8))

    state = RouteState(inst)
    product = 1.0
    for node in traj.nodes[1:]:
        dist = step_distribution(state, heat, g)
        product *= dist.probs[dist.actions.nodes.tolist().index(node)]
        state.advance(node)

    assert np.exp(traj.log_prob) == pytest.approx(product, rel=1e-12), "Recorded log P_F should match"


def test_decode_batch_modes(square_instance):
    """
    Test decode_batch sizes and determinism.

    This validates:
    - greedy yields a single trajectory whatever N is
    - sampling yields N trajectories and the best is the shortest
    - the same seed gives the same trajectories
    """
    inst = generate(GenConfig(n_customers=10, seed=6), ProblemKind.TSP)
    g = build_graph(inst)
    heat = random_heatmap(g, 6)

    greedy = decode_batch(inst, g, heat, DecodeConfig(mode=DecodeMode.GREEDY, n_rollouts=5))
    assert len(greedy.trajectories) == 1, "Greedy mode should return one trajectory"

    cfg = DecodeConfig(mode=DecodeMode.SAMPLE, n_rollouts=20, seed=3)
    first = decode_batch(inst, g, heat, cfg)
    second = decode_batch(inst, g, heat, cfg)
    assert len(first.trajectories) == 20, "Sampling should return N trajectories"
    assert first.best.length == first.lengths.min(), "Best should be the shortest"
    assert [t.nodes for t in first.trajectories] == [t.nodes for t in second.trajectories], \
        "Decoding should be deterministic per seed"


def test_best_of_n_is_monotone():
    """Test that more rollouts never give a worse best solution for the same seed"""
    inst = generate(GenConfig(n_customers=15, seed=2), ProblemKind.TSP)
    g = build_graph(inst)
    heat = random_heatmap(g, 2)

    bests = [
        decode_batch(inst, g, heat, DecodeConfig(mode=DecodeMode.SAMPLE, n_rollouts=n, seed=1)).best.length
        for n in (1, 5, 20, 50)
    ]
    assert all(a >= b for a, b in zip(bests, bests[1:])), f"Best-of-N should not increase: {bests}"


@pytest.mark.validation
def test_replay_rejects_infeasible_route(square_instance):
    """Test that replaying a route with a repeated node raises TrajectoryError"""
    g = build_graph(square_instance)
    with pytest.raises(TrajectoryError):
        replay(square_instance, g, [0, 1, 1, 2])
    with pytest.raises(TrajectoryError):
        replay(square_instance, g, [0, 1, 2])


@pytest.mark.validation
def test_invalid_decode_config(square_instance):
    """Test that P outside [0, 1] is rejected"""
    from src.errors import ConfigError

    g = build_graph(square_instance)
    with pytest.raises(ConfigError):
        decode_batch(square_instance, g, np.full(g.n_edges, 0.5),
                     DecodeConfig(mode=DecodeMode.HYBRID, hybrid_p=1.5))
