"""Loader for the transcribed published result tables"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional

from ..errors import AGFNError

REQUIRED_SECTIONS = ('synthetic', 'library', 'hybrid_p')


class ReferenceDataError(AGFNError):
    """Exception raised when the reference data file is missing or malformed"""
    pass


class ReferenceLoader:
    """
    Load published objectives of external solvers (LKH-3, POMO, GFACS, ...).

    The numbers are static and only used for report rendering; nothing here
    runs those solvers.
    """

    def __init__(self, data_path: Optional[Path] = None):
        """
        Initialize reference loader.

        Args:
            data_path: Path to reference_results.json
                       If None, uses the copy shipped in src/data/
        """
        if data_path is None:
            data_path = Path(__file__).parent.parent / 'data' / 'reference_results.json'

        self.data_path = Path(data_path)
        self._data: Optional[Dict[str, Any]] = None

    def load(self) -> Dict[str, Any]:
        """
        Load reference data from JSON file.

        Raises:
            ReferenceDataError: If the file is missing or its structure is invalid
        """
        if not self.data_path.exists():
            raise ReferenceDataError(f"Reference data not found: {self.data_path}")

        try:
            with open(self.data_path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ReferenceDataError(f"Invalid JSON in reference data: {str(e)}") from e

        missing = [key for key in REQUIRED_SECTIONS if key not in data]
        if missing:
            raise ReferenceDataError(f"Reference data missing sections: {', '.join(missing)}")

        self._data = data
        return data

    @property
    def data(self) -> Dict[str, Any]:
        if self._data is None:
            self.load()
        return self._data

    def synthetic_rows(self, problem: str, size: int) -> List[Dict[str, Any]]:
        """
        Rows of the synthetic benchmark table for one problem size.

        Raises:
            ReferenceDataError: If the problem or size was never reported
        """
        try:
            table = self.data['synthetic'][problem.lower()][str(size)]
        except KeyError as e:
            raise ReferenceDataError(f"No reference results for {problem}-{size}") from e
        return [
            {'method': method, 'obj': v['obj'], 'gap_pct': v['gap'], 'time_s': v['time']}
            for method, v in table.items()
        ]

    def library_rows(self, problem: str) -> List[Dict[str, Any]]:
        """Rows of the CVRPLib / TSPLib table"""
        try:
            table = self.data['library'][problem.lower()]
        except KeyError as e:
            raise ReferenceDataError(f"No library results for {problem}") from e
        return [
            {'method': method, 'obj': v['obj'], 'gap_pct': v['gap'], 'time_s': v['time']}
            for method, v in table.items()
        ]

    def hybrid_p_rows(self, problem: str) -> List[Dict[str, Any]]:
        """Rows (size, p, obj, gap_pct) of the hybrid decoding sensitivity table"""
        try:
            table = self.data['hybrid_p'][problem.lower()]
        except KeyError as e:
            raise ReferenceDataError(f"No hybrid decoding results for {problem}") from e
        rows = []
        for size, by_p in table.items():
            for p, (obj, gap) in by_p.items():
                rows.append({'size': int(size), 'p': float(p), 'obj': obj, 'gap_pct': gap})
        return rows

    def objective(self, problem: str, size: int, method: str) -> float:
        """
        Published mean objective of one method.

        Raises:
            ReferenceDataError: If the method was not reported for that size
        """
        for row in self.synthetic_rows(problem, size):
            if row['method'] == method:
                return row['obj']
        raise ReferenceDataError(f"Method '{method}' not reported for {problem}-{size}")
