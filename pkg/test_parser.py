"""
Tests for the TSPLib / CVRPLib / JSON instance parser and the config loader.

Usage:
    pytest test_parser.py -v
"""

import json

import pytest

from src.errors import ConfigError
from src.models import GenConfig, ProblemKind, TrainConfig, Trajectory
from src.parser import ConfigLoader, ConfigLoadError, InstanceParseError, InstanceParser, InstanceWriter
from src.pipeline import generate, generate_many

TINY_TSP = """NAME: tiny
TYPE: TSP
DIMENSION: 3
EDGE_WEIGHT_TYPE: EUC_2D
NODE_COORD_SECTION
1 0 0
2 1 0
3 0 1
EOF
"""

TINY_CVRP = """NAME : tiny-cvrp
TYPE : CVRP
DIMENSION : 4
EDGE_WEIGHT_TYPE : EUC_2D
CAPACITY : 50
NODE_COORD_SECTION
1 5 5
2 1 1
3 9 1
4 9 9
DEMAND_SECTION
1 0
2 3
3 4
4 5
DEPOT_SECTION
1
-1
EOF
"""


def test_parse_tsplib_fixture():
    """
    Test parsing of a minimal TSPLib file.

    This validates:
    - DIMENSION nodes are read
    - coordinates are kept as written
    - NAME is used as the instance name
    """
    inst = InstanceParser.parse_tsplib(TINY_TSP.encode('utf-8'))

    assert inst.kind == ProblemKind.TSP, "Should parse as TSP"
    assert inst.n_nodes == 3, "Should read 3 nodes"
    assert inst.coords.tolist() == [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], "Coordinates should match the file"
    assert inst.name == "tiny", "NAME should become the instance name"


@pytest.mark.validation
def test_tsplib_missing_coord_section():
    """Test that a TSPLib file without NODE_COORD_SECTION is rejected"""
    text = "NAME: x\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: EUC_2D\nEOF\n"
    with pytest.raises(InstanceParseError, match="NODE_COORD_SECTION"):
        InstanceParser.parse_tsplib(text)


@pytest.mark.validation
def test_tsplib_explicit_weights_unsupported():
    """Test that EDGE_WEIGHT_TYPE: EXPLICIT is reported with its line number"""
    text = TINY_TSP.replace("EUC_2D", "EXPLICIT")
    with pytest.raises(InstanceParseError, match=r"line 4.*EXPLICIT"):
        InstanceParser.parse_tsplib(text)


@pytest.mark.validation
def test_tsplib_malformed_row_names_line():
    """Test that a malformed coordinate row is reported with its line number"""
    text = TINY_TSP.replace("2 1 0", "2 1")
    with pytest.raises(InstanceParseError, match="line 7"):
        InstanceParser.parse_tsplib(text)


@pytest.mark.validation
def test_tsplib_dimension_mismatch():
    """Test that DIMENSION must match the number of coordinate rows"""
    text = TINY_TSP.replace("DIMENSION: 3", "DIMENSION: 4")
    with pytest.raises(InstanceParseError, match="DIMENSION"):
        InstanceParser.parse_tsplib(text)


def test_parse_cvrplib_fixture():
    """
    Test parsing of a minimal CVRPLib file.

    This validates:
    - capacity and demands are read
    - depot stays at index 0
    """
    inst = InstanceParser.parse_cvrplib(TINY_CVRP)

    assert inst.kind == ProblemKind.CVRP, "Should parse as CVRP"
    assert inst.capacity == 50, "CAPACITY should be 50"
    assert inst.demands.tolist() == [0, 3, 4, 5], "Demands should be aligned with nodes"
    assert inst.coords[0].tolist() == [5.0, 5.0], "Depot should be node 0"


def test_cvrplib_depot_relocated():
    """Test that a depot listed last is moved to index 0"""
    text = (TINY_CVRP
            .replace("1 5 5\n2 1 1\n3 9 1\n4 9 9", "1 1 1\n2 9 1\n3 9 9\n4 5 5")
            .replace("1 0\n2 3\n3 4\n4 5", "1 3\n2 4\n3 5\n4 0")
            .replace("DEPOT_SECTION\n1\n", "DEPOT_SECTION\n4\n"))
    inst = InstanceParser.parse_cvrplib(text)

    assert inst.coords[0].tolist() == [5.0, 5.0], "Depot (node 4) should be at index 0"
    assert inst.demands.tolist() == [0, 3, 4, 5], "Customers should keep their file order"
    assert inst.coords[1].tolist() == [1.0, 1.0], "First customer should follow the depot"


@pytest.mark.validation
def test_cvrplib_demand_above_capacity():
    """Test that a demand above CAPACITY is rejected"""
    text = TINY_CVRP.replace("4 5\nDEPOT", "4 60\nDEPOT")
    with pytest.raises(InstanceParseError, match="exceeds CAPACITY"):
        InstanceParser.parse_cvrplib(text)


@pytest.mark.validation
def test_cvrplib_missing_depot():
    """Test that a CVRPLib file without depot is rejected"""
    text = TINY_CVRP.replace("DEPOT_SECTION\n1\n-1\n", "")
    with pytest.raises(InstanceParseError, match="depot"):
        InstanceParser.parse_cvrplib(text)


def test_writer_round_trip():
    """
    Test that serializing a parsed instance parses back to the same instance.

    This validates:
    - TSPLib writer/parser agree
    - CVRPLib writer/parser agree
    - JSON writer/parser agree
    """
    tsp = generate(GenConfig(n_customers=12, seed=2), ProblemKind.TSP)
    cvrp = generate(GenConfig(n_customers=12, seed=2), ProblemKind.CVRP)

    assert InstanceParser.parse_tsplib(InstanceWriter.to_tsplib(tsp)) == tsp, "TSPLib round trip"
    assert InstanceParser.parse_cvrplib(InstanceWriter.to_cvrplib(cvrp)) == cvrp, "CVRPLib round trip"
    assert InstanceParser.parse_json(InstanceWriter.to_json(cvrp)) == cvrp, "JSON round trip"


def test_parse_text_detects_format():
    """Test format auto-detection for JSON, TSPLib and CVRPLib text"""
    inst = generate_many(GenConfig(n_customers=5, seed=1), ProblemKind.TSP, 1)[0]

    assert InstanceParser.parse_text(InstanceWriter.to_json(inst)) == inst, "JSON detected"
    assert InstanceParser.parse_text(TINY_TSP).kind == ProblemKind.TSP, "TSPLib detected"
    assert InstanceParser.parse_text(TINY_CVRP).kind == ProblemKind.CVRP, "CVRPLib detected"


def test_parse_file_by_suffix(tmp_path):
    """Test that parse_file reads .tsp and .vrp files"""
    (tmp_path / "a.tsp").write_text(TINY_TSP)
    (tmp_path / "b.vrp").write_text(TINY_CVRP)

    assert InstanceParser.parse_file(tmp_path / "a.tsp").n_nodes == 3
    assert InstanceParser.parse_file(tmp_path / "b.vrp").capacity == 50


def test_tour_export(square_instance):
    """Test the TSPLib .tour export of a solution"""
    traj = Trajectory.from_nodes([0, 1, 2, 3], square_instance)
    text = InstanceWriter.to_tour(traj, square_instance)

    assert "TOUR_SECTION\n1\n2\n3\n4\n-1\nEOF" in text, "Tour should list 1-based nodes and end with -1"


def test_config_loader_toml(tmp_path):
    """Test loading a nested TOML training config"""
    path = tmp_path / "cfg.toml"
    path.write_text(
        'kind = "cvrp"\nn_customers = 10\ntotal_steps = 3\n'
        '[policy]\nhidden_dim = 8\n'
        '[local_search]\nvariant = "two_opt"\n'
    )
    cfg = ConfigLoader(path).load()

    assert isinstance(cfg, TrainConfig), "Should build a TrainConfig"
    assert cfg.kind == ProblemKind.CVRP, "kind should be parsed"
    assert cfg.policy.hidden_dim == 8, "Nested tables should be applied"
    assert cfg.local_search.variant.value == "two_opt", "Enums should be parsed"


@pytest.mark.validation
def test_config_loader_rejects_unknown_keys(tmp_path):
    """Test that a typo in a config key is an error, not a silent default"""
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({'n_customer': 10}))
    with pytest.raises(ConfigError, match="n_customer"):
        ConfigLoader(path).load()


@pytest.mark.validation
def test_config_loader_missing_file(tmp_path):
    """Test that a missing config file raises ConfigLoadError"""
    with pytest.raises(ConfigLoadError):
        ConfigLoader(tmp_path / "nope.toml").load()


def test_shipped_configs_load():
    """Test that the example configs in configs/ are valid"""
    from pathlib import Path

    for path in sorted((Path(__file__).parent / "configs").glob("*.toml")):
        cfg = ConfigLoader(path).load()
        assert cfg.total_steps > 0, f"{path.name} should train for some steps"


def test_declared_python_version_covers_tomllib():
    """
    Test that the manifest declares the interpreter the TOML loader needs.

    tomllib exists from Python 3.11 on; requirements.txt must say so and the
    running interpreter must satisfy it.
    """
    import re
    import sys
    from pathlib import Path

    text = (Path(__file__).parent / "requirements.txt").read_text()
    match = re.search(r"Python >= (\d+)\.(\d+)", text)
    assert match, "requirements.txt should declare the minimum Python version"
    declared = (int(match.group(1)), int(match.group(2)))

    assert declared >= (3, 11), "tomllib needs Python 3.11"
    assert sys.version_info[:2] >= declared, "Interpreter older than the declared minimum"
