"""Adversarial GFlowNet training loop"""

import dataclasses
import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from ..autodiff import Tape, adam_step, backward, load_checkpoint, ops, save_checkpoint
from ..errors import CheckpointError, TrainingError
from ..models import (
    DecodeConfig,
    DecodeMode,
    GenConfig,
    Instance,
    LossMode,
    SparseGraph,
    TrainConfig,
    Trajectory,
)
from ..network.discriminator import Discriminator, LabeledSolutionSet, disc_loss, score_batch
from ..network.policy_net import INFER, TRAIN, Heatmap, PolicyNet
from ..rng import child_seed, substream
from .decoder import decode_batch
from .gflownet_loss import (
    LogZHead,
    backward_logprob,
    default_reward_temperature,
    forward_logprob_batch,
    shaped_reward,
    tb_loss,
    tb_loss_plain,
)
from .instances import generate, generate_many
from .local_search import improve
from .sparse_graph import build_graph

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.npz"
LOG_NAME = "train_log.jsonl"
# Constant discriminator score used when the adversary is disabled
NEUTRAL_SCORE = 0.5


@dataclass
class TrainLogRecord:
    """One evaluation point of a training run"""
    step: int
    tb_loss: float
    train_tb_loss: Optional[float]
    disc_loss: Optional[float]
    # discriminator updates applied so far
    disc_updates: int
    eval_mean_length: float
    eval_best_length: float
    wall_clock: float

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TrainLogRecord':
        return cls(**{f.name: data.get(f.name) for f in dataclasses.fields(cls)})


def with_seed(cfg: TrainConfig, seed: int) -> TrainConfig:
    """Copy of cfg whose run, network and local-search seeds all derive from seed"""
    return dataclasses.replace(
        cfg,
        seed=seed,
        policy=dataclasses.replace(cfg.policy, seed=child_seed(seed, "init", "policy")),
        discriminator=dataclasses.replace(
            cfg.discriminator, seed=child_seed(seed, "init", "discriminator")
        ),
        local_search=dataclasses.replace(cfg.local_search, seed=child_seed(seed, "local_search")),
    )


def read_log(path: Path) -> List[TrainLogRecord]:
    if not path.exists():
        return []
    records = []
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            if line.strip():
                records.append(TrainLogRecord.from_dict(json.loads(line)))
    return records


class Trainer:
    """
    Alternates generator and discriminator updates.

    Every step trains the generator on B fresh instances with K sampled
    rollouts each. Every gen_steps_per_disc_step steps the discriminator is
    trained to tell locally improved solutions from raw generator output.
    All randomness derives from (cfg.seed, step), so a resumed run continues
    exactly where the uninterrupted run would be.
    """

    def __init__(self, cfg: TrainConfig):
        cfg.validate()
        self.cfg = cfg
        self.policy = PolicyNet.for_kind(cfg.policy, cfg.kind)
        self.logz = LogZHead(cfg.policy.hidden_dim, cfg.policy.logz_mode)
        self.discriminator = Discriminator.for_kind(cfg.discriminator, cfg.kind)

        self.gen_params = self.policy.init_params()
        self.logz.init(self.gen_params, substream(cfg.policy.seed, "init", "logz"))
        self.disc_params = self.discriminator.init_params()

        self.reward_temperature = cfg.reward_temperature or default_reward_temperature(cfg.n_nodes)
        self.checkpoint_dir = Path(cfg.checkpoint_dir)
        self.step = 0
        self.records: List[TrainLogRecord] = []
        self._last_train_loss: Optional[float] = None
        self._last_disc_loss: Optional[float] = None
        self._disc_updates = 0

        self.eval_instances = generate_many(self._gen_config(child_seed(cfg.seed, "eval")),
                                            cfg.kind, cfg.eval_instances)
        self.eval_graphs = [build_graph(inst, cfg.sparse_k) for inst in self.eval_instances]

    @property
    def checkpoint_path(self) -> Path:
        return self.checkpoint_dir / CHECKPOINT_NAME

    @property
    def log_path(self) -> Path:
        return self.checkpoint_dir / LOG_NAME

    def _gen_config(self, seed: int) -> GenConfig:
        return GenConfig(
            n_customers=self.cfg.n_customers,
            demand_low=self.cfg.demand_low,
            demand_high=self.cfg.demand_high,
            capacity=self.cfg.capacity,
            seed=seed,
        )

    def train_batch(self, step: int) -> Tuple[List[Instance], List[SparseGraph]]:
        """The B fresh training instances of one step"""
        instances = [
            generate(self._gen_config(child_seed(self.cfg.seed, "train", step, b)), self.cfg.kind)
            for b in range(self.cfg.instances_per_step)
        ]
        return instances, [build_graph(inst, self.cfg.sparse_k) for inst in instances]

    def _rollouts(self, inst: Instance, g: SparseGraph, heatmap: Heatmap, n: int,
                  seed: int) -> List[Trajectory]:
        decode_cfg = DecodeConfig(mode=DecodeMode.SAMPLE, n_rollouts=n, seed=seed)
        return decode_batch(inst, g, heatmap, decode_cfg).trajectories

    def _scores(self, trajectories: Sequence[Trajectory], g: SparseGraph) -> np.ndarray:
        if not self.cfg.adversary_enabled:
            return np.full(len(trajectories), NEUTRAL_SCORE)
        return score_batch(self.discriminator, trajectories, g, self.disc_params)

    def _instance_loss(self, inst: Instance, heatmap: Heatmap, trajectories: List[Trajectory],
                       scores: np.ndarray, log_z):
        fwd = forward_logprob_batch(trajectories, heatmap, inst)
        pb = [backward_logprob(t, inst, self.cfg.pb_mode) for t in trajectories]
        lengths = [t.length for t in trajectories]
        if self.cfg.loss_mode == LossMode.PLAIN:
            return tb_loss_plain(fwd, lengths, log_z, self.reward_temperature, pb)
        return tb_loss(fwd, shaped_reward(lengths, scores), log_z, pb)

    def _check_finite(self, value: float, what: str, step: int) -> None:
        if np.isfinite(value):
            return
        dump = self.checkpoint_dir / f"diverged_step{step:06d}.json"
        dump.parent.mkdir(parents=True, exist_ok=True)
        with open(dump, 'w', encoding='utf-8') as f:
            json.dump({
                'step': step,
                'loss': what,
                'value': str(value),
                'config': self.cfg.to_dict(),
                'generator_hash': self.gen_params.state_hash(),
                'discriminator_hash': self.disc_params.state_hash(),
                'last_records': [r.to_dict() for r in self.records[-5:]],
            }, f, indent=2)
        raise TrainingError(f"{what} became {value} at step {step}; diagnostics in {dump}")

    def generator_step(self, step: int) -> float:
        """
        One TB update of the policy network and log Z head.

        Returns:
            Mean TB loss over the B instances

        Raises:
            TrainingError: If the loss is not finite
        """
        instances, graphs = self.train_batch(step)
        batch = SparseGraph.batch(graphs)

        tape = Tape()
        with tape:
            heatmap, h = self.policy.forward_with_embeddings(batch, self.gen_params, TRAIN)
            log_z = self.logz.forward(self.gen_params, h, batch.node_offsets)
            member_maps = heatmap.split(graphs)

        rollouts = [
            self._rollouts(inst, g, hm, self.cfg.rollouts_per_instance,
                           child_seed(self.cfg.seed, "gen_rollout", step, b))
            for b, (inst, g, hm) in enumerate(zip(instances, graphs, member_maps))
        ]
        scores = [self._scores(trajs, g) for trajs, g in zip(rollouts, graphs)]

        with tape:
            losses = [
                self._instance_loss(inst, hm, trajs, s, ops.gather(log_z, [b]))
                for b, (inst, hm, trajs, s) in enumerate(zip(instances, member_maps, rollouts, scores))
            ]
            loss = ops.mean_reduce(ops.stack_scalars(losses))

        value = loss.item()
        self._check_finite(value, "tb_loss", step)
        backward(loss, tape)
        adam_step(self.gen_params, lr=self.cfg.lr_gen)
        return value

    def discriminator_step(self, step: int) -> float:
        """
        One update of the discriminator on raw ("false") and improved ("true") solutions.

        Returns:
            Discriminator loss before the update
        """
        instances, graphs = self.train_batch(step)
        heatmap = self.policy.forward(SparseGraph.batch(graphs), self.gen_params, INFER)

        sets = LabeledSolutionSet()
        for b, (inst, g, hm) in enumerate(zip(instances, graphs, heatmap.split(graphs))):
            sets.add_instance(inst, g)
            raw = self._rollouts(inst, g, hm, self.cfg.rollouts_per_instance,
                                 child_seed(self.cfg.seed, "disc_rollout", step, b))
            sets.false_set.extend(raw)
            sets.true_set.extend(
                improve(t, inst, self.cfg.local_search,
                        rng=substream(self.cfg.local_search.seed, "local_search", step, b, k))
                for k, t in enumerate(raw)
            )

        with Tape() as tape:
            loss = disc_loss(self.discriminator, sets, self.disc_params, TRAIN)
        value = loss.item()
        self._check_finite(value, "disc_loss", step)
        backward(loss, tape)
        adam_step(self.disc_params, lr=self.cfg.lr_disc)
        return value

    def evaluate(self) -> Tuple[float, float, float]:
        """
        Frozen eval set, sampled rollouts, inference mode.

        Returns:
            (mean TB loss, mean rollout length, mean best-of-K length)
        """
        batch = SparseGraph.batch(self.eval_graphs)
        heatmap, h = self.policy.forward_with_embeddings(batch, self.gen_params, INFER)
        log_z = self.logz.forward(self.gen_params, h, batch.node_offsets)

        losses, means, bests = [], [], []
        for b, (inst, g, hm) in enumerate(zip(self.eval_instances, self.eval_graphs,
                                              heatmap.split(self.eval_graphs))):
            trajs = self._rollouts(inst, g, hm, self.cfg.eval_rollouts,
                                   child_seed(self.cfg.seed, "eval_rollout", b))
            lengths = np.array([t.length for t in trajs])
            means.append(lengths.mean())
            bests.append(lengths.min())
            loss = self._instance_loss(inst, hm, trajs, self._scores(trajs, g),
                                       ops.gather(log_z, [b]))
            losses.append(loss.item())
        return float(np.mean(losses)), float(np.mean(means)), float(np.mean(bests))

    def _eval_point(self, step: int, started: float) -> TrainLogRecord:
        tb, mean_len, best_len = self.evaluate()
        record = TrainLogRecord(
            step=step,
            tb_loss=tb,
            train_tb_loss=self._last_train_loss,
            disc_loss=self._last_disc_loss if self.cfg.adversary_enabled else None,
            disc_updates=self._disc_updates,
            eval_mean_length=mean_len,
            eval_best_length=best_len,
            wall_clock=time.perf_counter() - started,
        )
        self.records.append(record)
        with open(self.log_path, 'a', encoding='utf-8') as f:
            f.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
        self.save(step)
        logger.info(
            "step %d: tb_loss=%.4f disc_loss=%s eval_mean=%.4f eval_best=%.4f",
            step, tb, record.disc_loss, mean_len, best_len,
        )
        return record

    def save(self, step: int) -> Path:
        return save_checkpoint(
            self.checkpoint_path,
            {'policy': self.gen_params, 'discriminator': self.disc_params},
            extra={
                'step': step,
                'kind': self.cfg.kind.value,
                'config': self.cfg.to_dict(),
                'last_train_loss': self._last_train_loss,
                'last_disc_loss': self._last_disc_loss,
                'disc_updates': self._disc_updates,
            },
        )

    def restore(self) -> int:
        """
        Load the latest checkpoint of this run and drop log records written after it.

        Returns:
            Step the checkpoint was taken at

        Raises:
            CheckpointError: If no checkpoint exists or it does not match the config
        """
        stores, extra = load_checkpoint(self.checkpoint_path)
        if 'policy' not in stores or 'discriminator' not in stores:
            raise CheckpointError(f"{self.checkpoint_path} is not a training checkpoint")
        self.policy.check(stores['policy'])
        self.discriminator.check(stores['discriminator'])
        self.gen_params = stores['policy']
        self.disc_params = stores['discriminator']
        self.step = int(extra.get('step', 0))
        self._last_train_loss = extra.get('last_train_loss')
        self._last_disc_loss = extra.get('last_disc_loss')
        self._disc_updates = int(extra.get('disc_updates') or 0)

        self.records = [r for r in read_log(self.log_path) if r.step <= self.step]
        with open(self.log_path, 'w', encoding='utf-8') as f:
            for record in self.records:
                f.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
        logger.info("Resumed from %s at step %d", self.checkpoint_path, self.step)
        return self.step

    def is_eval_step(self, step: int) -> bool:
        return step % self.cfg.eval_every == 0 or step == self.cfg.total_steps

    def is_disc_step(self, step: int) -> bool:
        return self.cfg.adversary_enabled and step % self.cfg.gen_steps_per_disc_step == 0

    def train(self, resume: bool = False) -> List[TrainLogRecord]:
        """
        Run (or continue) training up to cfg.total_steps.

        Returns:
            All log records of the run, step 0 included
        """
        self.checkpoint_dir.mkdir(parents=True, exist_ok=True)
        started = time.perf_counter()

        if resume:
            self.restore()
        else:
            self.log_path.write_text("", encoding='utf-8')
            self.records = []
            self.step = 0
            self._disc_updates = 0
            self._eval_point(0, started)

        steps = range(self.step + 1, self.cfg.total_steps + 1)
        for step in tqdm(steps, desc="train", disable=not self.cfg.progress):
            self._last_train_loss = self.generator_step(step)
            if self.is_disc_step(step):
                self._last_disc_loss = self.discriminator_step(step)
                self._disc_updates += 1
            self.step = step
            if self.is_eval_step(step):
                self._eval_point(step, started)

        return self.records


def train(cfg: TrainConfig, resume: bool = False) -> Trainer:
    """Train with cfg and return the finished trainer (checkpoint and log are on disk)"""
    trainer = Trainer(cfg)
    trainer.train(resume=resume)
    return trainer
