"""
Shared pytest fixtures for the AGFN test suite.

Usage:
    pytest                 # fast suite (see run_tests.sh)
    pytest -m slow         # long-running training / statistics checks
"""

import dataclasses
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from src.models import (
    DiscriminatorConfig,
    Instance,
    LocalSearchConfig,
    PolicyNetConfig,
    ProblemKind,
    TrainConfig,
)


@pytest.fixture
def square_instance():
    """Four corners of the unit square; the optimal tour has length 4.0"""
    return Instance(
        kind=ProblemKind.TSP,
        coords=[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)],
        name="square",
    )


@pytest.fixture
def small_cvrp_instance():
    """Depot in the middle plus five customers"""
    return Instance(
        kind=ProblemKind.CVRP,
        coords=[(0.5, 0.5), (0.1, 0.1), (0.9, 0.1), (0.9, 0.9), (0.1, 0.9), (0.5, 0.95)],
        demands=[0, 3, 4, 5, 2, 6],
        capacity=10,
        name="cvrp_small",
    )


def make_train_config(tmp_path: Path, kind: ProblemKind = ProblemKind.TSP, **overrides) -> TrainConfig:
    """Tiny, fast TrainConfig writing into tmp_path"""
    cfg = TrainConfig(
        kind=kind,
        n_customers=6,
        instances_per_step=2,
        rollouts_per_instance=3,
        gen_steps_per_disc_step=2,
        total_steps=2,
        lr_gen=1e-3,
        lr_disc=1e-3,
        eval_every=1,
        eval_instances=2,
        eval_rollouts=3,
        seed=11,
        checkpoint_dir=str(tmp_path / "run"),
        policy=PolicyNetConfig(hidden_dim=4, n_layers=1, mlp_hidden=[4], seed=3),
        discriminator=DiscriminatorConfig(hidden_dim=4, n_layers=1, mlp_hidden=[4], seed=4),
        local_search=LocalSearchConfig(rounds=1, destroy_fraction=0.3, candidates_per_round=2,
                                       top_k=1, seed=5),
    )
    return dataclasses.replace(cfg, **overrides)


@pytest.fixture
def train_config(tmp_path, monkeypatch):
    """Factory for tiny training configs (AGFN_CHECKPOINT_DIR cleared)"""
    monkeypatch.delenv('AGFN_CHECKPOINT_DIR', raising=False)

    def factory(**overrides):
        return make_train_config(tmp_path, **overrides)

    return factory


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def _check_param_gradients(params, loss_fn, per_param: int = 2, h: float = 1e-5, rel: float = 1e-4) -> None:
    """
    Compare the recorded gradient of loss_fn with central differences.

    loss_fn is evaluated once under a tape and back-propagated, then the
    first `per_param` entries of every parameter are perturbed by +/- h.
    """
    from src.autodiff import Tape, backward

    params.zero_grad()
    with Tape() as tape:
        loss = loss_fn()
    backward(loss, tape)

    for name in params:
        tensor = params[name]
        flat = tensor.data.reshape(-1)
        for i in range(min(per_param, flat.size)):
            original = flat[i]
            flat[i] = original + h
            plus = loss_fn().item()
            flat[i] = original - h
            minus = loss_fn().item()
            flat[i] = original
            numeric = (plus - minus) / (2 * h)
            analytic = 0.0 if tensor.grad is None else tensor.grad.reshape(-1)[i]
            tol = rel * max(abs(numeric), abs(analytic)) + 1e-7
            assert abs(numeric - analytic) <= tol, \
                f"{name}[{i}]: analytic {analytic:.6g} vs numeric {numeric:.6g}"


@pytest.fixture
def assert_param_gradients():
    """Finite-difference gradient check over a ParameterStore"""
    return _check_param_gradients
