"""
Tests for instance models and random instance generation.

Usage:
    pytest test_instance.py -v
"""

import numpy as np
import pytest

from src.errors import ConfigError, InstanceError
from src.models import GenConfig, Instance, ProblemKind
from src.parser import InstanceParser, InstanceWriter
from src.pipeline import generate, generate_many


def test_generate_cvrp_demand_distribution():
    """
    Test that CVRP generation follows the uniform demand distribution.

    This validates:
    - depot plus n customers
    - depot demand is 0, customer demands lie in [a, b]
    - capacity is carried over
    """
    inst = generate(GenConfig(n_customers=100, demand_low=1, demand_high=9, capacity=50, seed=7),
                    ProblemKind.CVRP)

    assert inst.n_nodes == 101, "CVRP instance should have the depot plus 100 customers"
    assert inst.demands[0] == 0, "Depot demand should be 0"
    assert inst.demands[1:].min() >= 1 and inst.demands[1:].max() <= 9, \
        "Customer demands should lie in [1, 9]"
    assert inst.capacity == 50, "Capacity should be 50"
    assert np.all((inst.coords >= 0) & (inst.coords <= 1)), "Coordinates should lie in the unit square"


def test_generate_tiny_tsp():
    """Test that a 2-node TSP instance stays inside the unit square"""
    inst = generate(GenConfig(n_customers=2, seed=3), ProblemKind.TSP)

    assert inst.coords.shape == (2, 2), "Should generate 2 coordinates"
    assert np.all((inst.coords >= 0) & (inst.coords <= 1)), "Coordinates should lie in [0, 1]^2"
    assert len(inst.demands) == 0, "TSP instances carry no demands"


def test_generate_is_deterministic():
    """Test that the same config twice yields bit-identical instances"""
    cfg = GenConfig(n_customers=20, seed=99)
    a = generate(cfg, ProblemKind.CVRP)
    b = generate(cfg, ProblemKind.CVRP)

    assert a == b, "Same config should give the same instance"
    assert a.coords.tobytes() == b.coords.tobytes(), "Coordinates should be bit-identical"

    c = generate(GenConfig(n_customers=20, seed=100), ProblemKind.CVRP)
    assert not np.array_equal(a.coords, c.coords), "Another seed should give another instance"


def test_generate_many_is_prefix_stable():
    """Test that instance i of a dataset does not depend on the dataset size"""
    cfg = GenConfig(n_customers=10, seed=5)
    small = generate_many(cfg, ProblemKind.TSP, 2)
    large = generate_many(cfg, ProblemKind.TSP, 5)

    assert small[1] == large[1], "Instance 1 should be the same in both sets"
    assert len({inst.name for inst in large}) == 5, "Instance names should be unique"


@pytest.mark.validation
@pytest.mark.parametrize("overrides", [
    {'n_customers': 0},
    {'demand_low': 0},
    {'demand_low': 5, 'demand_high': 4},
    {'capacity': 8, 'demand_high': 9},
])
def test_invalid_gen_config(overrides):
    """Test that an ill-defined distribution is rejected with a ConfigError"""
    params = {'n_customers': 10} | overrides
    with pytest.raises(ConfigError):
        generate(GenConfig(**params), ProblemKind.CVRP)


@pytest.mark.validation
def test_instance_invariants():
    """
    Test that instance construction enforces its invariants.

    This validates:
    - at least 2 nodes
    - customer demands within (0, C]
    - depot demand is 0
    """
    with pytest.raises(InstanceError):
        Instance(kind=ProblemKind.TSP, coords=[(0.0, 0.0)])
    with pytest.raises(InstanceError):
        Instance(kind=ProblemKind.CVRP, coords=[(0, 0), (1, 1)], demands=[0, 60], capacity=50)
    with pytest.raises(InstanceError):
        Instance(kind=ProblemKind.CVRP, coords=[(0, 0), (1, 1)], demands=[0, 0], capacity=50)
    with pytest.raises(InstanceError):
        Instance(kind=ProblemKind.CVRP, coords=[(0, 0), (1, 1)], demands=[2, 1], capacity=50)


def test_distance_properties():
    """
    Test Euclidean distance properties on a generated instance.

    This validates:
    - symmetry and zero diagonal
    - triangle inequality
    - on-demand rows match the dense matrix
    """
    inst = generate(GenConfig(n_customers=30, seed=1), ProblemKind.TSP)
    d = inst.distance_matrix

    assert np.allclose(d, d.T), "Distances should be symmetric"
    assert np.all(np.diag(d) == 0), "Self distances should be 0"
    # d[i, k] <= d[i, j] + d[j, k] for all i, j, k
    assert np.all(d[:, None, :] <= d[:, :, None] + d[None, :, :] + 1e-12), \
        "Triangle inequality should hold"
    fresh = generate(GenConfig(n_customers=30, seed=1), ProblemKind.TSP)
    assert np.allclose(fresh.distances_from(4), d[4]), "Row distances should match the matrix"


def test_route_length_closes_tour(square_instance):
    """Test that an open node sequence is measured as a closed tour"""
    assert square_instance.route_length([0, 1, 2, 3]) == pytest.approx(4.0)
    assert square_instance.route_length([0, 2, 1, 3]) == pytest.approx(2 + 2 * np.sqrt(2))


def test_tsplib_rounding():
    """Test that the TSPLib rounding flag rounds every distance to the nearest integer"""
    coords = [(0.0, 0.0), (1.4, 0.0), (1.4, 2.6)]
    plain = Instance(kind=ProblemKind.TSP, coords=coords)
    rounded = Instance(kind=ProblemKind.TSP, coords=coords, tsplib_rounding=True)

    assert plain.distance(0, 1) == pytest.approx(1.4), "Default distances are exact"
    assert rounded.distance(0, 1) == 1.0, "1.4 should round to 1"
    assert rounded.distance(1, 2) == 3.0, "2.6 should round to 3"


def test_dict_round_trip(small_cvrp_instance):
    """Test that the native JSON representation reproduces the instance"""
    data = small_cvrp_instance.to_dict()
    assert set(data) == {'kind', 'name', 'coords', 'demands', 'capacity', 'tsplib_rounding'}, \
        "JSON format should have exactly the documented fields"
    assert Instance.from_dict(data) == small_cvrp_instance, "Round trip should be lossless"


def test_rounding_flag_survives_round_trip():
    """
    Test that the TSPLib rounding flag is part of the instance identity.

    This validates:
    - to_dict / from_dict and the JSON writer keep the flag
    - a rounded and an unrounded instance with equal coordinates differ
    """
    coords = [(0.0, 0.0), (1.4, 0.0), (1.4, 2.6)]
    plain = Instance(kind=ProblemKind.TSP, coords=coords, name="tri")
    rounded = Instance(kind=ProblemKind.TSP, coords=coords, name="tri", tsplib_rounding=True)

    restored = Instance.from_dict(rounded.to_dict())
    assert restored.tsplib_rounding is True, "Flag should round trip"
    assert restored == rounded and hash(restored) == hash(rounded), "Round trip should be lossless"
    assert restored.distance(1, 2) == 3.0, "Restored instance should still round distances"
    assert InstanceParser.parse_json(InstanceWriter.to_json(rounded)) == rounded, "JSON file keeps the flag"

    assert plain != rounded, "Rounding changes the instance"
    assert Instance.from_dict({'kind': 'tsp', 'coords': coords, 'name': 'tri'}) == plain, \
        "A missing flag means exact distances"


@pytest.mark.validation
def test_from_dict_missing_field():
    """Test that a JSON instance without coordinates is rejected"""
    with pytest.raises(InstanceError, match="coords"):
        Instance.from_dict({'kind': 'tsp'})


def test_problem_kind_parse():
    """Test problem kind parsing"""
    assert ProblemKind.parse("CVRP") is ProblemKind.CVRP
    with pytest.raises(ConfigError):
        ProblemKind.parse("vrptw")
