"""Random instance generation"""

import logging
from dataclasses import replace
from typing import List

import numpy as np

from ..models import GenConfig, Instance, ProblemKind
from ..rng import child_seed, substream

logger = logging.getLogger(__name__)


def generate(cfg: GenConfig, kind: ProblemKind) -> Instance:
    """
    Sample one instance from the uniform distribution.

    Coordinates are i.i.d. uniform on the unit square; CVRP adds a depot
    (node 0, also uniform) and integer demands uniform on
    [demand_low, demand_high].

    Args:
        cfg: Distribution parameters and seed
        kind: TSP or CVRP

    Returns:
        Instance, bit-identical for identical (cfg, kind)

    Raises:
        ConfigError: If cfg is invalid
    """
    cfg.validate()
    kind = ProblemKind.parse(kind)
    rng = substream(cfg.seed, "instance", kind.value)

    if kind == ProblemKind.TSP:
        coords = rng.random((cfg.n_customers, 2))
        return Instance(kind=kind, coords=coords, name=f"tsp{cfg.n_customers}_s{cfg.seed}")

    coords = rng.random((cfg.n_customers + 1, 2))
    demands = np.zeros(cfg.n_customers + 1, dtype=np.int64)
    demands[1:] = rng.integers(cfg.demand_low, cfg.demand_high + 1, size=cfg.n_customers)
    return Instance(
        kind=kind,
        coords=coords,
        demands=demands,
        capacity=cfg.capacity,
        name=f"cvrp{cfg.n_customers}_s{cfg.seed}",
    )


def generate_many(cfg: GenConfig, kind: ProblemKind, count: int) -> List[Instance]:
    """
    `count` instances whose seeds are derived from cfg.seed and the index.

    Instance i of a set is the same whatever the set size.
    """
    instances = []
    for i in range(count):
        child = GenConfig(
            n_customers=cfg.n_customers,
            demand_low=cfg.demand_low,
            demand_high=cfg.demand_high,
            capacity=cfg.capacity,
            seed=child_seed(cfg.seed, "dataset", i),
        )
        inst = generate(child, kind)
        instances.append(replace(inst, name=f"{kind.value}{cfg.n_customers}_{i:04d}"))
    logger.debug("Generated %d %s instances (n=%d)", count, kind.value, cfg.n_customers)
    return instances
