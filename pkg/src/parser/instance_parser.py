"""Parser for TSPLib, CVRPLib and native JSON instance files"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

from ..errors import InstanceError
from ..models import Instance, ProblemKind, Trajectory

logger = logging.getLogger(__name__)

TextInput = Union[str, bytes]

SECTION_KEYWORDS = (
    'NODE_COORD_SECTION',
    'DEMAND_SECTION',
    'DEPOT_SECTION',
    'EDGE_WEIGHT_SECTION',
    'DISPLAY_DATA_SECTION',
    'TOUR_SECTION',
)


class InstanceParseError(InstanceError):
    """Exception raised when parsing an instance file fails"""
    pass


class InstanceParser:
    """
    Parse routing instances from text formats.

    Supports:
    - TSPLib TSP files with EDGE_WEIGHT_TYPE EUC_2D
    - CVRPLib files in the Uchoa-style format (single depot)
    - The native JSON format {kind, name, coords, demands, capacity}
    """

    @staticmethod
    def parse_tsplib(text: TextInput, tsplib_rounding: bool = False) -> Instance:
        """
        Parse a TSPLib EUC_2D file.

        Expected format:
        ```
        NAME: tiny
        TYPE: TSP
        DIMENSION: 3
        EDGE_WEIGHT_TYPE: EUC_2D
        NODE_COORD_SECTION
        1 0 0
        2 1 0
        3 0 1
        EOF
        ```

        Args:
            text: File contents
            tsplib_rounding: Round distances to the nearest integer (needed
                for gaps against published TSPLib optima)

        Returns:
            TSP Instance with the coordinates as written

        Raises:
            InstanceParseError: On unsupported formats or malformed sections
        """
        header, sections = InstanceParser._split(text)
        InstanceParser._check_edge_weight_type(header)
        dimension = InstanceParser._dimension(header)

        if 'NODE_COORD_SECTION' not in sections:
            raise InstanceParseError("Missing required section: NODE_COORD_SECTION")
        ids, coords = InstanceParser._read_coords(sections['NODE_COORD_SECTION'], dimension)

        try:
            return Instance(
                kind=ProblemKind.TSP,
                coords=coords,
                name=header.get('NAME', ('', 'tsplib'))[1] or 'tsplib',
                tsplib_rounding=tsplib_rounding,
            )
        except InstanceError as e:
            raise InstanceParseError(f"Invalid TSPLib instance: {str(e)}") from e

    @staticmethod
    def parse_cvrplib(text: TextInput, tsplib_rounding: bool = False) -> Instance:
        """
        Parse a CVRPLib file.

        The depot listed in DEPOT_SECTION is moved to index 0; the remaining
        nodes keep their file order.

        Raises:
            InstanceParseError: On a missing depot, a demand above capacity or
                malformed sections
        """
        header, sections = InstanceParser._split(text)
        InstanceParser._check_edge_weight_type(header)
        dimension = InstanceParser._dimension(header)

        if 'CAPACITY' not in header:
            raise InstanceParseError("Missing required field: CAPACITY")
        cap_line, cap_value = header['CAPACITY']
        try:
            capacity = int(float(cap_value))
        except ValueError as e:
            raise InstanceParseError(f"line {cap_line}: invalid CAPACITY '{cap_value}'") from e

        for required in ('NODE_COORD_SECTION', 'DEMAND_SECTION'):
            if required not in sections:
                raise InstanceParseError(f"Missing required section: {required}")
        if 'DEPOT_SECTION' not in sections:
            raise InstanceParseError("Missing depot: DEPOT_SECTION not found")

        ids, coords = InstanceParser._read_coords(sections['NODE_COORD_SECTION'], dimension)
        demands = InstanceParser._read_demands(sections['DEMAND_SECTION'], ids, capacity)
        depot = InstanceParser._read_depot(sections['DEPOT_SECTION'], ids)

        position = ids.index(depot)
        order = [position] + [i for i in range(len(ids)) if i != position]
        if demands[position] != 0:
            raise InstanceParseError(f"Depot {depot} must have demand 0, got {demands[position]}")

        try:
            return Instance(
                kind=ProblemKind.CVRP,
                coords=[coords[i] for i in order],
                demands=[demands[i] for i in order],
                capacity=capacity,
                name=header.get('NAME', ('', 'cvrplib'))[1] or 'cvrplib',
                tsplib_rounding=tsplib_rounding,
            )
        except InstanceError as e:
            raise InstanceParseError(f"Invalid CVRPLib instance: {str(e)}") from e

    @staticmethod
    def parse_json(text: TextInput) -> Instance:
        """Parse the native JSON instance format"""
        if isinstance(text, bytes):
            text = text.decode('utf-8')
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise InstanceParseError(f"Invalid JSON instance: {str(e)}") from e
        try:
            return Instance.from_dict(data)
        except InstanceError as e:
            raise InstanceParseError(str(e)) from e

    @staticmethod
    def parse_text(text: TextInput, tsplib_rounding: bool = False) -> Instance:
        """
        Parse an instance from text (auto-detect format).

        JSON if the text starts with '{'; CVRPLib if it declares a CAPACITY
        or DEMAND_SECTION; TSPLib otherwise.
        """
        decoded = text.decode('utf-8', errors='replace') if isinstance(text, bytes) else text
        stripped = decoded.strip()
        if stripped.startswith('{'):
            return InstanceParser.parse_json(stripped)
        upper = stripped.upper()
        if 'DEMAND_SECTION' in upper or 'CAPACITY' in upper:
            return InstanceParser.parse_cvrplib(stripped, tsplib_rounding)
        return InstanceParser.parse_tsplib(stripped, tsplib_rounding)

    @staticmethod
    def parse_file(path: Union[str, Path], tsplib_rounding: bool = False) -> Instance:
        """Read and parse an instance file (.json, .tsp, .vrp or anything else by content)"""
        path = Path(path)
        data = path.read_bytes()
        suffix = path.suffix.lower()
        if suffix == '.json':
            return InstanceParser.parse_json(data)
        if suffix == '.tsp':
            return InstanceParser.parse_tsplib(data, tsplib_rounding)
        if suffix == '.vrp':
            return InstanceParser.parse_cvrplib(data, tsplib_rounding)
        return InstanceParser.parse_text(data, tsplib_rounding)

    @staticmethod
    def _split(text: TextInput) -> Tuple[Dict[str, Tuple[int, str]], Dict[str, List[Tuple[int, str]]]]:
        """Split a TSPLib-family file into header fields and section bodies"""
        if isinstance(text, bytes):
            text = text.decode('utf-8', errors='replace')

        header: Dict[str, Tuple[int, str]] = {}
        sections: Dict[str, List[Tuple[int, str]]] = {}
        current: Optional[str] = None

        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line:
                continue
            upper = line.upper()
            if upper == 'EOF':
                break

            keyword = upper.split(':')[0].split()[0] if upper else ''
            if keyword in SECTION_KEYWORDS:
                current = keyword
                sections[current] = []
                continue

            if ':' in line and not line[0].isdigit() and not line[0] == '-':
                key, value = line.split(':', 1)
                header[key.strip().upper()] = (lineno, value.strip())
                current = None
                continue

            if current is None:
                raise InstanceParseError(f"line {lineno}: unexpected content '{line}'")
            sections[current].append((lineno, line))

        return header, sections

    @staticmethod
    def _check_edge_weight_type(header: Dict[str, Tuple[int, str]]) -> None:
        if 'EDGE_WEIGHT_TYPE' not in header:
            return
        lineno, value = header['EDGE_WEIGHT_TYPE']
        if value.upper() != 'EUC_2D':
            raise InstanceParseError(
                f"line {lineno}: unsupported EDGE_WEIGHT_TYPE '{value}' (only EUC_2D)"
            )

    @staticmethod
    def _dimension(header: Dict[str, Tuple[int, str]]) -> int:
        if 'DIMENSION' not in header:
            raise InstanceParseError("Missing required field: DIMENSION")
        lineno, value = header['DIMENSION']
        try:
            dimension = int(value)
        except ValueError as e:
            raise InstanceParseError(f"line {lineno}: invalid DIMENSION '{value}'") from e
        if dimension < 2:
            raise InstanceParseError(f"line {lineno}: DIMENSION must be >= 2, got {dimension}")
        return dimension

    @staticmethod
    def _read_coords(lines: List[Tuple[int, str]], dimension: int) -> Tuple[List[int], List[Tuple[float, float]]]:
        ids: List[int] = []
        coords: List[Tuple[float, float]] = []
        for lineno, line in lines:
            parts = line.split()
            if len(parts) != 3:
                raise InstanceParseError(
                    f"line {lineno}: expected 'id x y' in NODE_COORD_SECTION, got '{line}'"
                )
            try:
                node_id = int(parts[0])
                x, y = float(parts[1]), float(parts[2])
            except ValueError as e:
                raise InstanceParseError(f"line {lineno}: malformed coordinate row '{line}'") from e
            if node_id in ids:
                raise InstanceParseError(f"line {lineno}: duplicate node id {node_id}")
            ids.append(node_id)
            coords.append((x, y))

        if len(coords) != dimension:
            last = lines[-1][0] if lines else 0
            raise InstanceParseError(
                f"line {last}: NODE_COORD_SECTION has {len(coords)} rows, DIMENSION is {dimension}"
            )
        return ids, coords

    @staticmethod
    def _read_demands(lines: List[Tuple[int, str]], ids: List[int], capacity: int) -> List[int]:
        demand_by_id: Dict[int, int] = {}
        for lineno, line in lines:
            parts = line.split()
            if len(parts) != 2:
                raise InstanceParseError(
                    f"line {lineno}: expected 'id demand' in DEMAND_SECTION, got '{line}'"
                )
            try:
                node_id, demand = int(parts[0]), int(parts[1])
            except ValueError as e:
                raise InstanceParseError(f"line {lineno}: malformed demand row '{line}'") from e
            if node_id not in ids:
                raise InstanceParseError(f"line {lineno}: demand for unknown node {node_id}")
            if demand > capacity:
                raise InstanceParseError(
                    f"line {lineno}: demand {demand} of node {node_id} exceeds CAPACITY {capacity}"
                )
            demand_by_id[node_id] = demand

        missing = [i for i in ids if i not in demand_by_id]
        if missing:
            raise InstanceParseError(f"DEMAND_SECTION is missing nodes {missing[:5]}")
        return [demand_by_id[i] for i in ids]

    @staticmethod
    def _read_depot(lines: List[Tuple[int, str]], ids: List[int]) -> int:
        depots: List[int] = []
        for lineno, line in lines:
            for token in line.split():
                try:
                    value = int(token)
                except ValueError as e:
                    raise InstanceParseError(f"line {lineno}: malformed depot entry '{token}'") from e
                if value == -1:
                    break
                if value not in ids:
                    raise InstanceParseError(f"line {lineno}: depot {value} is not a listed node")
                depots.append(value)
        if not depots:
            raise InstanceParseError("Missing depot: DEPOT_SECTION lists no node")
        if len(depots) > 1:
            raise InstanceParseError(f"Multiple depots are not supported: {depots}")
        return depots[0]


class InstanceWriter:
    """Serialize instances and solutions to the supported text formats"""

    @staticmethod
    def to_tsplib(instance: Instance) -> str:
        """TSPLib EUC_2D text for a TSP instance"""
        if instance.is_cvrp:
            raise InstanceError("to_tsplib expects a TSP instance; use to_cvrplib")
        lines = [
            f"NAME : {instance.name}",
            "TYPE : TSP",
            f"DIMENSION : {instance.n_nodes}",
            "EDGE_WEIGHT_TYPE : EUC_2D",
            "NODE_COORD_SECTION",
        ]
        lines += [f"{i + 1} {x!r} {y!r}" for i, (x, y) in enumerate(instance.coords.tolist())]
        lines.append("EOF")
        return "\n".join(lines) + "\n"

    @staticmethod
    def to_cvrplib(instance: Instance) -> str:
        """CVRPLib text for a CVRP instance (depot written as node 1)"""
        if not instance.is_cvrp:
            raise InstanceError("to_cvrplib expects a CVRP instance; use to_tsplib")
        lines = [
            f"NAME : {instance.name}",
            "TYPE : CVRP",
            f"DIMENSION : {instance.n_nodes}",
            "EDGE_WEIGHT_TYPE : EUC_2D",
            f"CAPACITY : {instance.capacity}",
            "NODE_COORD_SECTION",
        ]
        lines += [f"{i + 1} {x!r} {y!r}" for i, (x, y) in enumerate(instance.coords.tolist())]
        lines.append("DEMAND_SECTION")
        lines += [f"{i + 1} {d}" for i, d in enumerate(instance.demands.tolist())]
        lines += ["DEPOT_SECTION", "1", "-1", "EOF"]
        return "\n".join(lines) + "\n"

    @staticmethod
    def to_json(instance: Instance) -> str:
        return json.dumps(instance.to_dict(), indent=2)

    @staticmethod
    def to_tour(trajectory: Trajectory, instance: Instance) -> str:
        """TSPLib .tour file (1-based node ids)"""
        if instance.is_cvrp:
            raise InstanceError(".tour files are only defined for TSP solutions")
        lines = [
            f"NAME : {instance.name}.tour",
            f"COMMENT : Length = {trajectory.length!r}",
            "TYPE : TOUR",
            f"DIMENSION : {instance.n_nodes}",
            "TOUR_SECTION",
        ]
        lines += [str(v + 1) for v in trajectory.nodes]
        lines += ["-1", "EOF"]
        return "\n".join(lines) + "\n"
