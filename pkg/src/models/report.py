"""Benchmark report models"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional


@dataclass
class GapReport:
    """
    Per-instance objectives of several methods against a reference method.

    gap% = (obj - ref) / ref * 100, per instance and on the means.
    """
    reference: str
    objectives: Dict[str, List[float]]
    gaps: Dict[str, List[float]]
    mean_objective: Dict[str, float]
    mean_gap: Dict[str, float]

    def rows(self) -> List[Dict[str, Any]]:
        """One row per method, for CSV export"""
        return [
            {
                'method': method,
                'mean_obj': self.mean_objective[method],
                'gap_pct': self.mean_gap[method],
                'n_instances': len(values),
            }
            for method, values in self.objectives.items()
        ]


@dataclass
class RunManifest:
    """Everything needed to reproduce one CLI run"""
    command: str
    config: Dict[str, Any]
    code_version: str
    seed: int
    started_at: str
    finished_at: Optional[str] = None
    status: str = "running"
    outputs: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'command': self.command,
            'config': self.config,
            'code_version': self.code_version,
            'seed': self.seed,
            'started_at': self.started_at,
            'finished_at': self.finished_at,
            'status': self.status,
            'outputs': sorted(self.outputs),
        }
