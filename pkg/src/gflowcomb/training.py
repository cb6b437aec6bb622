"""Rollouts, the training loop, and best-of-k sampling.

One optimizer update consumes one shuffled batch of transitions (or one
trajectory for the trajectory-level variants).  The inverse temperature
ramps linearly from 1 to its target over the first anneal_frac of the
planned budget, measured in updates when num_updates is given and in
dataset passes otherwise.
"""

from __future__ import annotations

import collections
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import env
from .autodiff import no_grad
from .env import State, Task
from .graphs import Graph
from .losses import Trajectory, tb_loss, transition_batch_loss
from .nn import GinConfig, PolicyModel
from .optim import Adam


@dataclass
class TrainConfig:
    loss: str = "fl"                 # fl | db | tb
    level: str = "transition"        # transition | trajectory (tb implies trajectory)
    beta: float = 500.0
    anneal_frac: float = 0.5
    explore_eps: float = 0.0
    batch_size: int = 64
    epochs: int = 20
    num_updates: int | None = None   # overrides epochs when set
    lr: float = 1e-3
    rollouts_per_update: int = 1
    seed: int = 0
    gin: GinConfig = field(default_factory=GinConfig)

    def __post_init__(self):
        if self.loss not in ("fl", "db", "tb"):
            raise ValueError(f"unknown loss {self.loss!r}")
        if self.level not in ("transition", "trajectory"):
            raise ValueError(f"unknown level {self.level!r}")
        if self.loss == "tb":
            self.level = "trajectory"
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        if not 0.0 <= self.anneal_frac <= 1.0:
            raise ValueError("anneal_frac must be in [0, 1]")
        if not 0.0 <= self.explore_eps <= 1.0:
            raise ValueError("explore_eps must be in [0, 1]")
        if self.batch_size < 1 or self.epochs < 1 or self.rollouts_per_update < 1:
            raise ValueError("batch_size, epochs, rollouts_per_update must be >= 1")
        if self.num_updates is not None and self.num_updates < 0:
            raise ValueError("num_updates must be >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["gin"] = {"num_layers": self.gin.num_layers,
                    "hidden_dim": self.gin.hidden_dim}
        return d


@dataclass
class LogRow:
    update: int
    epoch: int
    loss: float
    beta: float
    mean_objective: float
    wall_ms: float


def beta_schedule(target: float, anneal_frac: float, progress: float) -> float:
    """Linear ramp 1 -> target over the first anneal_frac of training."""
    if anneal_frac <= 0.0 or progress >= anneal_frac:
        return target
    return 1.0 + (target - 1.0) * (progress / anneal_frac)


def _policy_probs(model, g: Graph, s: State, mask: np.ndarray,
                  explore_eps: float) -> np.ndarray:
    legal = np.nonzero(mask)[0]
    if model is None:
        probs = np.full(legal.shape[0], 1.0 / legal.shape[0])
    else:
        with no_grad():
            logits = model.forward_policy(g, s.labels.reshape(1, -1))
        z = logits.data[0, legal]
        z = z - z.max()
        ez = np.exp(z)
        probs = ez / ez.sum()
    if explore_eps > 0.0:
        probs = (1.0 - explore_eps) * probs + explore_eps / legal.shape[0]
    return probs / probs.sum()


def rollout(g: Graph, task: Task, model, explore_eps: float,
            rng: np.random.Generator) -> Trajectory:
    """Sample one complete trajectory; model=None rolls a uniform policy."""
    s = env.initial_state(g, task)
    states, actions = [s], []
    while not s.is_terminal:
        mask = env.action_mask(g, s, task)
        if not mask.any():
            if task is not Task.MDS:
                raise RuntimeError("non-terminal state with no action")
            s = env.finalize_mds(s)
            states.append(s)
            break
        legal = np.nonzero(mask)[0]
        probs = _policy_probs(model, g, s, mask, explore_eps)
        a = int(legal[rng.choice(legal.shape[0], p=probs)])
        s = env.step(g, s, a, task).state
        states.append(s)
        actions.append(a)
    return Trajectory(graph=g, task=task, states=states, actions=actions)


def train(dataset: list[Graph], task: Task, cfg: TrainConfig,
          rng: np.random.Generator | None = None,
          callback=None) -> tuple[PolicyModel, list[LogRow]]:
    """Run the full training loop; returns the model and per-update log.

    callback, if given, is invoked as callback(update, model) after
    every optimizer step; useful for periodic validation probes.
    """
    if not dataset:
        raise ValueError("empty dataset")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    model = PolicyModel(cfg.gin, rng)
    opt = Adam(model.parameters(), lr=cfg.lr)

    total_visits = cfg.epochs * len(dataset)
    rows: list[LogRow] = []
    recent = collections.deque(maxlen=100)
    t0 = time.perf_counter()
    update = 0
    visit = 0
    done = False

    for epoch in range(cfg.epochs if cfg.num_updates is None else 10 ** 9):
        order = rng.permutation(len(dataset))
        for gi in order:
            if cfg.num_updates is not None and update >= cfg.num_updates:
                done = True
                break
            g = dataset[int(gi)]
            trajs = [rollout(g, task, model, cfg.explore_eps, rng)
                     for _ in range(cfg.rollouts_per_update)]
            for tr in trajs:
                recent.append(env.objective_value(g, tr.final_state, task))

            if cfg.level == "trajectory":
                batches = [tr for tr in trajs if tr.actions]
            else:
                records = [r for tr in trajs for r in tr.to_records()]
                rng.shuffle(records)
                batches = [records[i:i + cfg.batch_size]
                           for i in range(0, len(records), cfg.batch_size)]

            for batch in batches:
                if cfg.num_updates is not None:
                    if update >= cfg.num_updates:
                        done = True
                        break
                    progress = update / cfg.num_updates
                else:
                    progress = visit / total_visits
                beta = beta_schedule(cfg.beta, cfg.anneal_frac, progress)
                if cfg.loss == "tb":
                    log_z = model.forward_flow(
                        g, batch.states[0].labels.reshape(1, -1)).reshape(())
                    loss = tb_loss(batch, model, log_z, beta)
                elif cfg.level == "trajectory":
                    loss = transition_batch_loss(batch.to_records(), model,
                                                 beta, cfg.loss)
                else:
                    loss = transition_batch_loss(batch, model, beta, cfg.loss)
                opt.zero_grad()
                loss.backward()
                opt.step()
                update += 1
                rows.append(LogRow(
                    update=update, epoch=epoch, loss=loss.item(), beta=beta,
                    mean_objective=float(np.mean(recent)) if recent else 0.0,
                    wall_ms=(time.perf_counter() - t0) * 1e3))
                if callback is not None:
                    callback(update, model)
            visit += 1
            if done:
                break
        if done:
            break
    return model, rows


def sample_best_of_k(g: Graph, task: Task, model, k: int,
                     rng: np.random.Generator) -> tuple[State, float]:
    """Best of k policy samples; forward passes batched across rollouts."""
    if k < 1:
        raise ValueError("k must be >= 1")
    states = [env.initial_state(g, task) for _ in range(k)]
    active = [i for i in range(k) if not states[i].is_terminal]
    while active:
        batch = np.stack([states[i].labels for i in active])
        masks = env.batch_action_mask(g, batch, task)
        if model is not None:
            with no_grad():
                logits = model.forward_policy(g, batch).data
        still = []
        for row, i in enumerate(active):
            mask = masks[row]
            if not mask.any():
                if task is not Task.MDS:
                    raise RuntimeError("non-terminal state with no action")
                states[i] = env.finalize_mds(states[i])
                continue
            legal = np.nonzero(mask)[0]
            if model is None:
                probs = np.full(legal.shape[0], 1.0 / legal.shape[0])
            else:
                z = logits[row, legal]
                z = z - z.max()
                ez = np.exp(z)
                probs = ez / ez.sum()
            a = int(legal[rng.choice(legal.shape[0], p=probs)])
            states[i] = env.step(g, states[i], a, task).state
            if not states[i].is_terminal:
                still.append(i)
        active = still
    values = [env.objective_value(g, s, task) for s in states]
    if task.maximize:
        best = max(range(k), key=lambda i: (values[i], -i))
    else:
        best = min(range(k), key=lambda i: (values[i], i))
    return states[best], values[best]
