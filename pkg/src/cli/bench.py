"""Benchmark command line: data generation, training, solving and reports"""

import argparse
import contextlib
import dataclasses
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config.config import Config

from .. import __version__
from ..errors import AGFNError, CheckpointError, ConfigError
from ..logging_config import configure_logging
from ..models import (
    DecodeConfig,
    DecodeMode,
    GenConfig,
    Instance,
    LocalSearchVariant,
    ProblemKind,
    RunManifest,
    TrainConfig,
    Trajectory,
)
from ..parser import ConfigLoader, InstanceParseError, InstanceParser, InstanceWriter
from ..pipeline.baselines import (
    gap_pct,
    gap_report,
    held_karp,
    load_reference_results,
    nearest_neighbor,
    nearest_neighbor_two_opt,
    run_baselines,
)
from ..pipeline.instances import generate_many
from ..pipeline.solver import Solver
from ..pipeline.trainer import Trainer, with_seed

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

MANIFEST_NAME = "manifest.json"
INDEX_NAME = "index.json"
INSTANCE_SUFFIXES = ('.json', '.tsp', '.vrp')
DEFAULT_P_GRID = "0.01,0.03,0.05,0.07,0.10"
ABLATION_VARIANTS = ('adversary_on', 'adversary_off', 'ls_destroy_repair', 'ls_two_opt')
REFERENCE_METHODS = ('nearest_neighbor', 'nearest_neighbor_2opt', 'held_karp', 'greedy')


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec='seconds')


def _jsonable(value: Any) -> Any:
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def _write_manifest(out_dir: Path, manifest: RunManifest) -> None:
    with open(out_dir / MANIFEST_NAME, 'w', encoding='utf-8') as f:
        json.dump(manifest.to_dict(), f, indent=2, sort_keys=True)


@contextlib.contextmanager
def run_manifest(out_dir: Path, command: str, config: Dict[str, Any],
                 seed: int) -> Iterator[RunManifest]:
    """
    Write a RunManifest before the run and finalize it afterwards.

    The manifest is marked "failed" (and the error re-raised) when the body raises.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(
        command=command,
        config=_jsonable(config),
        code_version=f"agfn-{__version__}",
        seed=seed,
        started_at=_now(),
    )
    _write_manifest(out_dir, manifest)
    try:
        yield manifest
    except BaseException:
        manifest.status = "failed"
        manifest.finished_at = _now()
        _write_manifest(out_dir, manifest)
        raise
    manifest.status = "completed"
    manifest.finished_at = _now()
    _write_manifest(out_dir, manifest)


def _args_config(args: argparse.Namespace) -> Dict[str, Any]:
    return {k: v for k, v in vars(args).items() if k != 'func'}


def _write_csv(df: pd.DataFrame, path: Path, manifest: RunManifest) -> Path:
    df.to_csv(path, index=False)
    manifest.outputs.append(str(path))
    return path


def _parse_floats(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(',') if v.strip()]
    except ValueError as e:
        raise ConfigError(f"Expected a comma-separated list of numbers, got '{text}'") from e


def _parse_ints(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(',') if v.strip()]
    except ValueError as e:
        raise ConfigError(f"Expected a comma-separated list of integers, got '{text}'") from e


def load_instances(path: Path) -> List[Instance]:
    """
    Instances from a file or a directory.

    A directory written by gen-data is read in index order; any other
    directory is read in file-name order.

    Raises:
        InstanceParseError: If a file cannot be parsed
        ConfigError: If the path does not exist
    """
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Instance path not found: {path}")
    if path.is_file():
        return [InstanceParser.parse_file(path)]

    index = path / INDEX_NAME
    if index.exists():
        with open(index, 'r', encoding='utf-8') as f:
            files = [path / name for name in json.load(f)['files']]
    else:
        files = sorted(
            p for p in path.iterdir()
            if p.suffix.lower() in INSTANCE_SUFFIXES and p.name not in (MANIFEST_NAME, INDEX_NAME)
        )
    return [InstanceParser.parse_file(f) for f in files]


def _decode_config(args: argparse.Namespace, mode: Optional[str] = None,
                   p: Optional[float] = None, seed: Optional[int] = None) -> DecodeConfig:
    cfg = DecodeConfig(
        mode=mode or args.mode,
        hybrid_p=args.p if p is None else p,
        n_rollouts=args.n_rollouts,
        seed=args.seed if seed is None else seed,
        temperature=args.temperature,
    )
    cfg.validate()
    return cfg


# Worker pool plumbing: each process loads the checkpoint once
_WORKER_SOLVER: Optional[Solver] = None


def _init_worker(checkpoint: str) -> None:
    global _WORKER_SOLVER
    _WORKER_SOLVER = Solver.from_checkpoint(checkpoint)


def _solve_task(task: Tuple[Instance, DecodeConfig]) -> Tuple[Trajectory, float]:
    inst, cfg = task
    return _WORKER_SOLVER.solve(inst, cfg)


def solve_all(checkpoint: Path, instances: Sequence[Instance], cfg: DecodeConfig,
              workers: int = 1, solver: Optional[Solver] = None) -> List[Tuple[Trajectory, float]]:
    """
    Best solution and wall-clock seconds per instance, in instance order.

    Rollout streams depend only on cfg.seed, so results do not depend on workers.
    """
    if workers <= 1 or len(instances) <= 1:
        solver = solver or Solver.from_checkpoint(checkpoint)
        return [solver.solve(inst, cfg) for inst in instances]
    with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                             initargs=(str(checkpoint),)) as pool:
        return list(pool.map(_solve_task, [(inst, cfg) for inst in instances]))


def reference_objectives(method: str, instances: Sequence[Instance], args: argparse.Namespace,
                         solver: Optional[Solver] = None) -> List[float]:
    """Objectives of a named reference method on every instance"""
    if method == 'nearest_neighbor':
        return [nearest_neighbor(inst).length for inst in instances]
    if method == 'nearest_neighbor_2opt':
        return [nearest_neighbor_two_opt(inst).length for inst in instances]
    if method == 'held_karp':
        return [held_karp(inst) for inst in instances]
    if method == 'greedy':
        cfg = _decode_config(args, mode=DecodeMode.GREEDY.value)
        results = solve_all(args.checkpoint, instances, cfg, args.workers, solver)
        return [traj.length for traj, _ in results]
    raise ConfigError(f"Unknown reference method '{method}' (choose from {', '.join(REFERENCE_METHODS)})")


def cmd_gen_data(args: argparse.Namespace) -> None:
    out = Path(args.out)
    if out.exists() and any(out.iterdir()) and not args.force:
        raise ConfigError(f"Output directory {out} is not empty (use --force to overwrite)")
    if args.count < 0:
        raise ConfigError(f"--count must be >= 0, got {args.count}")

    kind = ProblemKind.parse(args.kind)
    cfg = GenConfig(
        n_customers=args.n,
        demand_low=args.demand_low,
        demand_high=args.demand_high,
        capacity=args.capacity,
        seed=args.seed,
    )
    cfg.validate()

    with run_manifest(out, 'gen-data', _args_config(args), args.seed) as manifest:
        files = []
        for inst in generate_many(cfg, kind, args.count):
            path = out / f"{inst.name}.json"
            path.write_text(InstanceWriter.to_json(inst), encoding='utf-8')
            files.append(path.name)
        index = {
            'kind': kind.value,
            'n': args.n,
            'count': args.count,
            'seed': args.seed,
            'files': files,
        }
        (out / INDEX_NAME).write_text(json.dumps(index, indent=2), encoding='utf-8')
        manifest.outputs.extend(str(out / name) for name in files + [INDEX_NAME])

    print(f"Wrote {len(files)} {kind.value} instances to {out}")


def _train_config(args: argparse.Namespace) -> TrainConfig:
    cfg = ConfigLoader(Path(args.config) if args.config else None).load()
    if args.seed is not None:
        cfg = with_seed(cfg, args.seed)
    if args.checkpoint_dir:
        cfg = dataclasses.replace(cfg, checkpoint_dir=str(args.checkpoint_dir))
    if args.total_steps is not None:
        cfg = dataclasses.replace(cfg, total_steps=args.total_steps)
    if getattr(args, 'progress', False):
        cfg = dataclasses.replace(cfg, progress=True)
    cfg.validate()
    return cfg


def cmd_train(args: argparse.Namespace) -> None:
    cfg = _train_config(args)
    out = Path(cfg.checkpoint_dir)
    with run_manifest(out, 'train', cfg.to_dict(), cfg.seed) as manifest:
        trainer = Trainer(cfg)
        records = trainer.train(resume=args.resume)
        manifest.outputs.extend([str(trainer.checkpoint_path), str(trainer.log_path)])

    for record in records:
        disc = "null" if record.disc_loss is None else f"{record.disc_loss:.4f}"
        print(f"step {record.step}: tb_loss={record.tb_loss:.4f} disc_loss={disc} "
              f"eval_mean={record.eval_mean_length:.4f} eval_best={record.eval_best_length:.4f}")
    print(f"Checkpoint: {trainer.checkpoint_path}")


def cmd_solve(args: argparse.Namespace) -> None:
    cfg = _decode_config(args)
    instances = load_instances(args.instances)
    out = Path(args.out)
    config = _args_config(args)
    config['decode'] = dataclasses.asdict(cfg) | {'mode': cfg.mode.value}

    with run_manifest(out, 'solve', config, args.seed) as manifest:
        solver = Solver.from_checkpoint(args.checkpoint)
        results = solve_all(args.checkpoint, instances, cfg, args.workers, solver)

        solutions = out / "solutions"
        solutions.mkdir(parents=True, exist_ok=True)
        rows = []
        for inst, (traj, seconds) in zip(instances, results):
            path = solutions / f"{inst.name}.json"
            path.write_text(json.dumps(traj.to_dict(), indent=2), encoding='utf-8')
            manifest.outputs.append(str(path))
            if not inst.is_cvrp:
                tour = solutions / f"{inst.name}.tour"
                tour.write_text(InstanceWriter.to_tour(traj, inst), encoding='utf-8')
                manifest.outputs.append(str(tour))
            if args.dump_heatmaps:
                heatmap, _ = solver.heatmap(inst)
                manifest.outputs.append(str(heatmap.dump(out / "heatmaps" / f"{inst.name}.json")))
            rows.append({'instance': inst.name, 'obj': traj.length, 'time_s': seconds})

        df = pd.DataFrame(rows, columns=['instance', 'obj', 'time_s'])
        _write_csv(df, out / "summary.csv", manifest)

    if rows:
        print(f"Solved {len(rows)} instances: mean obj {df['obj'].mean():.6f}, "
              f"mean time {df['time_s'].mean():.3f}s")


def cmd_sweep_p(args: argparse.Namespace) -> None:
    p_list = _parse_floats(args.p_list)
    seeds = _parse_ints(args.seeds)
    if not p_list or not seeds:
        raise ConfigError("--p-list and --seeds must not be empty")
    instances = load_instances(args.instances)
    out = Path(args.out)

    with run_manifest(out, 'sweep-p', _args_config(args), seeds[0]) as manifest:
        solver = Solver.from_checkpoint(args.checkpoint)
        ref = float(np.mean(reference_objectives(args.reference, instances, args, solver)))
        rows = []
        for p in p_list:
            objs = []
            for seed in seeds:
                cfg = _decode_config(args, mode=DecodeMode.HYBRID.value, p=p, seed=seed)
                objs.extend(t.length for t, _ in solve_all(args.checkpoint, instances, cfg,
                                                          args.workers, solver))
            mean_obj = float(np.mean(objs))
            rows.append({'p': p, 'mean_obj': mean_obj, 'gap_pct': gap_pct(mean_obj, ref)})
            logger.info("P=%.3f: mean obj %.6f", p, mean_obj)

        df = pd.DataFrame(rows, columns=['p', 'mean_obj', 'gap_pct'])
        _write_csv(df, out / "sweep_p.csv", manifest)
    print(df.to_string(index=False))


def cmd_decode_compare(args: argparse.Namespace) -> None:
    instances = load_instances(args.instances)
    out = Path(args.out)

    with run_manifest(out, 'decode-compare', _args_config(args), args.seed) as manifest:
        solver = Solver.from_checkpoint(args.checkpoint)
        objectives: Dict[str, List[float]] = {}
        times: Dict[str, float] = {}
        for mode in DecodeMode:
            cfg = _decode_config(args, mode=mode.value)
            results = solve_all(args.checkpoint, instances, cfg, args.workers, solver)
            objectives[mode.value] = [t.length for t, _ in results]
            times[mode.value] = float(np.mean([s for _, s in results])) if results else 0.0
        if args.reference not in objectives:
            objectives[args.reference] = reference_objectives(args.reference, instances, args, solver)
            times[args.reference] = float('nan')

        report = gap_report(objectives, args.reference)
        rows = [row | {'time_s': times[row['method']]} for row in report.rows()]
        _write_csv(pd.DataFrame(rows), out / "decode_compare.csv", manifest)
        _write_csv(_per_instance_frame(instances, report), out / "per_instance.csv", manifest)
    print(pd.DataFrame(rows).to_string(index=False))


def _per_instance_frame(instances: Sequence[Instance], report) -> pd.DataFrame:
    rows = []
    for method, values in report.objectives.items():
        for inst, obj, gap in zip(instances, values, report.gaps[method]):
            rows.append({'instance': inst.name, 'method': method, 'obj': obj, 'gap_pct': gap})
    return pd.DataFrame(rows, columns=['instance', 'method', 'obj', 'gap_pct'])


def variant_config(base: TrainConfig, variant: str, seed: int, checkpoint_dir: Path) -> TrainConfig:
    """Training config of one ablation variant"""
    if variant == 'adversary_on':
        cfg = dataclasses.replace(base, adversary_enabled=True)
    elif variant == 'adversary_off':
        cfg = dataclasses.replace(base, adversary_enabled=False)
    elif variant == 'ls_destroy_repair':
        cfg = dataclasses.replace(base, local_search=dataclasses.replace(
            base.local_search, variant=LocalSearchVariant.DESTROY_REPAIR))
    elif variant == 'ls_two_opt':
        cfg = dataclasses.replace(base, local_search=dataclasses.replace(
            base.local_search, variant=LocalSearchVariant.TWO_OPT))
    else:
        raise ConfigError(
            f"Unknown ablation variant '{variant}' (choose from {', '.join(ABLATION_VARIANTS)})"
        )
    cfg = with_seed(cfg, seed)
    return dataclasses.replace(cfg, checkpoint_dir=str(checkpoint_dir), progress=False)


def _train_job(cfg: TrainConfig) -> List[Dict[str, Any]]:
    return [r.to_dict() for r in Trainer(cfg).train()]


def cmd_ablate(args: argparse.Namespace) -> None:
    variants = [v.strip() for v in args.variants.split(',') if v.strip()]
    seeds = _parse_ints(args.seeds)
    if not variants or not seeds:
        raise ConfigError("--variants and --seeds must not be empty")
    base = _train_config(argparse.Namespace(
        config=args.config, seed=None, checkpoint_dir=None, total_steps=args.total_steps,
    ))
    out = Path(args.out)

    # repeated variants get their own label so every curve keeps its own file
    labels = []
    for v in variants:
        labels.append(v if v not in labels else f"{v}_{sum(1 for x in labels if x.startswith(v))}")

    jobs = [
        (label, seed, variant_config(base, variant, seed, out / label / f"seed{seed}"))
        for label, variant in zip(labels, variants)
        for seed in seeds
    ]

    with run_manifest(out, 'ablate', _args_config(args) | {'base': base.to_dict()}, seeds[0]) as manifest:
        if args.workers > 1:
            with ProcessPoolExecutor(max_workers=args.workers) as pool:
                outputs = list(pool.map(_train_job, [cfg for _, _, cfg in jobs]))
        else:
            outputs = [_train_job(cfg) for _, _, cfg in jobs]

        records = [
            {'variant': label, 'seed': seed, 'step': r['step'], 'obj': r['eval_best_length']}
            for (label, seed, _), recs in zip(jobs, outputs)
            for r in recs
        ]
        df = pd.DataFrame(records, columns=['variant', 'seed', 'step', 'obj'])
        curves = []
        for label in labels:
            curve = (df[df['variant'] == label]
                     .groupby('step', as_index=False)['obj'].mean()
                     .rename(columns={'obj': 'mean_obj'}))
            curve.insert(1, 'variant', label)
            _write_csv(curve, out / f"curve_{label}.csv", manifest)
            curves.append(curve)
        merged = pd.concat(curves, ignore_index=True)[['step', 'variant', 'mean_obj']]
        _write_csv(merged, out / "ablation.csv", manifest)

    final = merged.loc[merged.groupby('variant', sort=False)['step'].idxmax()]
    print(final.to_string(index=False))


def cmd_baselines(args: argparse.Namespace) -> None:
    instances = load_instances(args.instances)
    out = Path(args.out)

    with run_manifest(out, 'baselines', _args_config(args), 0) as manifest:
        exact = True if args.exact or args.reference == 'held_karp' else None
        objectives = run_baselines(instances, exact=exact)
        reference = args.reference or (
            'held_karp' if 'held_karp' in objectives else 'nearest_neighbor_2opt'
        )
        report = gap_report(objectives, reference)
        _write_csv(pd.DataFrame(report.rows()), out / "baselines.csv", manifest)
        _write_csv(_per_instance_frame(instances, report), out / "per_instance.csv", manifest)
    print(pd.DataFrame(report.rows()).to_string(index=False))


def cmd_reference(args: argparse.Namespace) -> None:
    loader = load_reference_results(args.data)
    if args.table == 'synthetic':
        if args.size is None:
            raise ConfigError("--size is required for the synthetic table")
        rows = loader.synthetic_rows(args.problem, args.size)
    elif args.table == 'library':
        rows = loader.library_rows(args.problem)
    else:
        rows = loader.hybrid_p_rows(args.problem)
        if args.size is not None:
            rows = [r for r in rows if r['size'] == args.size]

    df = pd.DataFrame(rows)
    print("Published results (transcribed, not recomputed):")
    print(df.to_string(index=False))
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(out, index=False)


def _add_decode_args(parser: argparse.ArgumentParser, with_mode: bool = True) -> None:
    parser.add_argument('--checkpoint', type=Path, required=True, help="Training checkpoint (.npz)")
    parser.add_argument('--instances', type=Path, required=True, help="Instance file or directory")
    if with_mode:
        parser.add_argument('--mode', choices=[m.value for m in DecodeMode], default=Config.DECODE_MODE)
    parser.add_argument('--p', type=float, default=Config.HYBRID_P, help="Hybrid sampling probability")
    parser.add_argument('--n-rollouts', type=int, default=Config.N_ROLLOUTS)
    parser.add_argument('--temperature', type=float, default=1.0)
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--workers', type=int, default=1, help="Worker processes")
    parser.add_argument('--out', type=Path, required=True)


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m src.cli.bench",
        description="Adversarial GFlowNet routing solver: benchmarks and experiments.",
    )
    parser.add_argument('--log-file', default=None, help="Rotating log file (default: AGFN_LOG_FILE)")
    parser.add_argument('--log-level', default=None, help="Log level (default: AGFN_LOG_LEVEL or INFO)")
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('gen-data', help="Generate random instances")
    p.add_argument('--kind', choices=[k.value for k in ProblemKind], required=True)
    p.add_argument('--n', type=int, required=True, help="Number of customers")
    p.add_argument('--count', type=int, default=128)
    p.add_argument('--seed', type=int, default=0)
    p.add_argument('--capacity', type=int, default=50)
    p.add_argument('--demand-low', type=int, default=1)
    p.add_argument('--demand-high', type=int, default=9)
    p.add_argument('--out', type=Path, required=True)
    p.add_argument('--force', action='store_true', help="Write into a non-empty directory")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser('train', help="Train generator and discriminator")
    p.add_argument('--config', type=Path, default=None, help="TrainConfig (.json or .toml)")
    p.add_argument('--seed', type=int, default=None, help="Override every seed of the config")
    p.add_argument('--checkpoint-dir', type=Path, default=None)
    p.add_argument('--total-steps', type=int, default=None)
    p.add_argument('--resume', action='store_true', help="Continue from the last checkpoint")
    p.add_argument('--progress', action='store_true', help="Show a progress bar")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser('solve', help="Decode instances with a trained policy")
    _add_decode_args(p)
    p.add_argument('--dump-heatmaps', action='store_true', help="Also write every heatmap as JSON")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser('sweep-p', help="Hybrid decoding sensitivity to P")
    _add_decode_args(p, with_mode=False)
    p.add_argument('--p-list', default=DEFAULT_P_GRID)
    p.add_argument('--seeds', default="0")
    p.add_argument('--reference', choices=REFERENCE_METHODS, default='nearest_neighbor_2opt')
    p.set_defaults(func=cmd_sweep_p, mode=DecodeMode.HYBRID.value)

    p = sub.add_parser('decode-compare', help="Greedy vs sampling vs hybrid decoding")
    _add_decode_args(p, with_mode=False)
    p.add_argument('--reference', choices=REFERENCE_METHODS, default='greedy')
    p.set_defaults(func=cmd_decode_compare, mode=DecodeMode.HYBRID.value)

    p = sub.add_parser('ablate', help="Train ablation variants and emit learning curves")
    p.add_argument('--config', type=Path, default=None)
    p.add_argument('--variants', default=','.join(ABLATION_VARIANTS[:2]))
    p.add_argument('--seeds', default="0")
    p.add_argument('--total-steps', type=int, default=None)
    p.add_argument('--workers', type=int, default=1)
    p.add_argument('--out', type=Path, required=True)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser('baselines', help="Nearest neighbour, 2-opt and Held-Karp objectives")
    p.add_argument('--instances', type=Path, required=True)
    p.add_argument('--reference', choices=REFERENCE_METHODS[:3], default=None)
    p.add_argument('--exact', action='store_true', help="Force Held-Karp (TSP, n <= 14)")
    p.add_argument('--out', type=Path, required=True)
    p.set_defaults(func=cmd_baselines)

    p = sub.add_parser('reference', help="Show transcribed published results")
    p.add_argument('--problem', choices=[k.value for k in ProblemKind], required=True)
    p.add_argument('--table', choices=['synthetic', 'library', 'hybrid_p'], default='synthetic')
    p.add_argument('--size', type=int, default=None)
    p.add_argument('--data', type=Path, default=None, help="Alternative reference data JSON")
    p.add_argument('--out', type=Path, default=None, help="Also write the table as CSV")
    p.set_defaults(func=cmd_reference)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_arg_parser().parse_args(argv)
    configure_logging(args.log_file or Config.LOG_FILE, args.log_level or Config.LOG_LEVEL)

    try:
        args.func(args)
    except (ConfigError, InstanceParseError, CheckpointError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (AGFNError, OSError) as e:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
