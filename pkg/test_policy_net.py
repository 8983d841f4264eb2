"""
Tests for the generator network (gated GNN + heatmap head).

Usage:
    pytest test_policy_net.py -v
"""

import json

import numpy as np
import pytest

from src.autodiff import ShapeError, Tape, backward, constant, ops
from src.errors import CheckpointError, ConfigError
from src.models import GenConfig, Instance, PolicyNetConfig, ProblemKind
from src.network import INFER, TRAIN, PolicyNet
from src.pipeline import build_graph, generate


@pytest.fixture
def tsp_graph():
    inst = generate(GenConfig(n_customers=10, seed=21), ProblemKind.TSP)
    return inst, build_graph(inst)


def test_parameter_registration():
    """Test that a 1-layer network registers U, V, P, Q, R for layer 0"""
    net = PolicyNet.for_kind(PolicyNetConfig(hidden_dim=4, n_layers=1, mlp_hidden=[4]), ProblemKind.TSP)
    store = net.init_params()

    for name in ("U", "V", "P", "Q", "R"):
        assert f"layer0.{name}" in store, f"layer0.{name} should be registered"
        assert store[f"layer0.{name}"].shape == (4, 4), f"layer0.{name} should be d x d"
    assert "layer1.U" not in store, "Only one layer should exist"
    assert store["node_embed.W"].shape == (2, 4), "TSP node projection is 2 -> d"
    assert store["head.1.W"].shape == (4, 1), "Head should end in one output"


def test_init_is_seeded():
    """Test that two inits with the same seed are identical and another seed differs"""
    cfg = PolicyNetConfig(hidden_dim=8, n_layers=2, seed=5)
    a = PolicyNet.for_kind(cfg, ProblemKind.CVRP).init_params()
    b = PolicyNet.for_kind(cfg, ProblemKind.CVRP).init_params()
    c = PolicyNet.for_kind(PolicyNetConfig(hidden_dim=8, n_layers=2, seed=6), ProblemKind.CVRP).init_params()

    assert a.state_hash() == b.state_hash(), "Same seed should give identical parameters"
    assert a.state_hash() != c.state_hash(), "Another seed should give other parameters"


def test_init_bounds():
    """Test uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization"""
    store = PolicyNet.for_kind(PolicyNetConfig(hidden_dim=16, n_layers=1), ProblemKind.TSP).init_params()
    assert np.abs(store["layer0.U"].data).max() <= 0.25, "fan_in 16 gives bound 0.25"


@pytest.mark.validation
def test_zero_hidden_dim_rejected():
    """Test that d = 0 is a configuration error"""
    with pytest.raises(ConfigError):
        PolicyNet.for_kind(PolicyNetConfig(hidden_dim=0), ProblemKind.TSP)


def test_heatmap_range(tsp_graph):
    """
    Test that the heatmap is aligned with the edges and strictly inside (0, 1).

    This validates:
    - one score per directed edge
    - sigmoid output range in both modes
    """
    inst, g = tsp_graph
    net = PolicyNet.for_kind(PolicyNetConfig(hidden_dim=8, n_layers=2), ProblemKind.TSP)
    params = net.init_params()

    for mode in (INFER, TRAIN):
        heatmap = net.forward(g, params, mode)
        assert heatmap.values.shape == (g.n_edges,), "One score per edge"
        assert np.all((heatmap.values > 0) & (heatmap.values < 1)), "Scores should be in (0, 1)"


def test_zero_weights_pass_through(tsp_graph):
    """Test that zero layer weights make every layer an identity (SiLU(0) = 0)"""
    _, g = tsp_graph
    net = PolicyNet.for_kind(PolicyNetConfig(hidden_dim=4, n_layers=2), ProblemKind.TSP)
    params = net.init_params()
    for layer in range(2):
        for name in ("U", "V", "P", "Q", "R"):
            params[f"layer{layer}.{name}"].data[:] = 0.0

    h, e = net.embed(g, params, INFER)
    h0 = g.node_feat_raw @ params["node_embed.W"].data + params["node_embed.b"].data
    e0 = g.edge_feat_raw @ params["edge_embed.W"].data + params["edge_embed.b"].data

    assert np.allclose(h.data, h0), "Node embeddings should pass through unchanged"
    assert np.allclose(e.data, e0), "Edge embeddings should pass through unchanged"


def test_permutation_equivariance(tsp_graph):
    """Test that relabelling nodes permutes the heatmap without changing its values"""
    inst, g = tsp_graph
    net = PolicyNet.for_kind(PolicyNetConfig(hidden_dim=8, n_layers=2), ProblemKind.TSP)
    params = net.init_params()

    perm = np.random.default_rng(0).permutation(inst.n_nodes)
    permuted = Instance(kind=ProblemKind.TSP, coords=inst.coords[perm])
    gp = build_graph(permuted)

    original = {(s, d): v for s, d, v in net.forward(g, params, INFER).triples()}
    relabelled = net.forward(gp, params, INFER).triples()

    assert len(original) == len(relabelled), "Same number of edges"
    for s, d, v in relabelled:
        assert abs(original[(int(perm[s]), int(perm[d]))] - v) < 1e-9, \
            "Score of a relabelled edge should be unchanged"


@pytest.mark.validation
def test_feature_width_mismatch(tsp_graph):
    """Test that a CVRP network on TSP features raises a shape error"""
    _, g = tsp_graph
    net = PolicyNet.for_kind(PolicyNetConfig(hidden_dim=4, n_layers=1), ProblemKind.CVRP)
    with pytest.raises(ShapeError):
        net.forward(g, net.init_params(), INFER)


@pytest.mark.validation
def test_architecture_check():
    """Test that a store of another architecture is rejected"""
    small = PolicyNet.for_kind(PolicyNetConfig(hidden_dim=4, n_layers=1), ProblemKind.TSP)
    large = PolicyNet.for_kind(PolicyNetConfig(hidden_dim=8, n_layers=1), ProblemKind.TSP)
    with pytest.raises(CheckpointError, match="hidden_dim"):
        large.check(small.init_params())


def test_parameter_gradients_match_finite_differences():
    """
    Test heatmap gradients w.r.t. every parameter against central differences.

    6-node instance, d = 4, L = 2; a few entries of every parameter are checked.
    """
    inst = generate(GenConfig(n_customers=6, seed=13), ProblemKind.TSP)
    g = build_graph(inst)
    net = PolicyNet.for_kind(PolicyNetConfig(hidden_dim=4, n_layers=2, mlp_hidden=[4]), ProblemKind.TSP)
    params = net.init_params()
    weights = constant(np.random.default_rng(1).uniform(0.5, 1.5, size=(g.n_edges, 1)))

    def loss_fn():
        heatmap = net.forward(g, params, TRAIN)
        return ops.mean_reduce(ops.hadamard(ops.log(heatmap.scores), weights))

    params.zero_grad()
    with Tape() as tape:
        loss = loss_fn()
    backward(loss, tape)

    h = 1e-5
    for name in params:
        tensor = params[name]
        flat = tensor.data.reshape(-1)
        for i in range(min(3, flat.size)):
            original = flat[i]
            flat[i] = original + h
            plus = loss_fn().item()
            flat[i] = original - h
            minus = loss_fn().item()
            flat[i] = original
            numeric = (plus - minus) / (2 * h)
            analytic = tensor.grad.reshape(-1)[i]
            tol = 1e-4 * max(abs(numeric), abs(analytic)) + 1e-7
            assert abs(numeric - analytic) <= tol, \
                f"{name}[{i}]: analytic {analytic:.6g} vs numeric {numeric:.6g}"


def test_heatmap_dump(tmp_path, tsp_graph):
    """Test the JSON debug dump of a heatmap"""
    _, g = tsp_graph
    net = PolicyNet.for_kind(PolicyNetConfig(hidden_dim=4, n_layers=1), ProblemKind.TSP)
    path = net.forward(g, net.init_params(), INFER).dump(tmp_path / "heat" / "h.json")

    data = json.loads(path.read_text())
    assert data['n_nodes'] == g.n_nodes, "Dump should record the node count"
    assert len(data['edges']) == g.n_edges, "One triple per edge"
    src, dst, score = data['edges'][0]
    assert (src, dst) == g.edges[0] and 0 < score < 1, "Triples are (src, dst, score)"
