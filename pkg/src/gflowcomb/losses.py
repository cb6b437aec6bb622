"""Flow-matching training objectives over sampled transitions.

All residuals live in log space.  The backward policy is fixed uniform
over the chosen-vertex set of the successor state, contributing
-log(num_backward).  Terminal conventions: the detailed-balance loss
substitutes log R(x) = -beta * E(x) for the terminal flow, while the
forward-looking loss pins the terminal correction flow at zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Tensor, masked_log_softmax, take_per_row
from .env import (State, Task, batch_action_mask, intermediate_energy,
                  num_backward_choices, terminal_energy)
from .graphs import Graph

VARIANTS = ("fl", "db", "tb")


@dataclass
class TransitionRecord:
    """One MDP transition with the quantities losses need, precomputed."""

    graph: Graph
    task: Task
    state: State
    action: int
    next_state: State
    terminal: bool
    energy_state: float
    energy_next: float
    num_backward: int

    @property
    def graph_id(self) -> str:
        return self.graph.graph_id


@dataclass
class Trajectory:
    """Complete rollout s0 -> ... -> terminal on one graph."""

    graph: Graph
    task: Task
    states: list[State]
    actions: list[int]
    _records: list[TransitionRecord] | None = field(default=None, repr=False)

    @property
    def final_state(self) -> State:
        return self.states[-1]

    def to_records(self) -> list[TransitionRecord]:
        if self._records is None:
            g, task = self.graph, self.task
            energies = [intermediate_energy(g, s, task) for s in self.states]
            recs = []
            for i, a in enumerate(self.actions):
                nxt = self.states[i + 1]
                recs.append(TransitionRecord(
                    graph=g, task=task, state=self.states[i], action=a,
                    next_state=nxt, terminal=nxt.is_terminal,
                    energy_state=energies[i], energy_next=energies[i + 1],
                    num_backward=num_backward_choices(nxt, task)))
            self._records = recs
        return self._records


@dataclass
class LogZParam:
    """Learnable log partition estimate for one conditioning graph."""

    value: Tensor

    @classmethod
    def fresh(cls) -> "LogZParam":
        return cls(Tensor(0.0, requires_grad=True))


def transition_batch_loss(records: list[TransitionRecord], model,
                          beta: float, variant: str) -> Tensor:
    """Mean squared residual over a batch of same-graph transitions."""
    if variant not in ("fl", "db"):
        raise ValueError(f"variant must be fl or db, got {variant!r}")
    if not records:
        raise ValueError("empty batch")
    g, task = records[0].graph, records[0].task
    if any(r.graph is not g or r.task is not task for r in records):
        raise ValueError("batch must come from a single graph and task")

    s_labels = np.stack([r.state.labels for r in records])
    sp_labels = np.stack([r.next_state.labels for r in records])
    actions = np.array([r.action for r in records], dtype=np.int64)
    e_s = np.array([r.energy_state for r in records])
    e_sp = np.array([r.energy_next for r in records])
    nback = np.array([r.num_backward for r in records], dtype=np.float64)
    nonterm = np.array([0.0 if r.terminal else 1.0 for r in records])

    masks = batch_action_mask(g, s_labels, task)
    logits = model.forward_policy(g, s_labels)
    logpf = take_per_row(masked_log_softmax(logits, masks), actions)

    bsz = len(records)
    flows = model.forward_flow(g, np.concatenate([s_labels, sp_labels]))
    f_s, f_sp = flows[:bsz], flows[bsz:]

    if variant == "fl":
        const = beta * (e_sp - e_s) + np.log(nback)
    else:
        const = (1.0 - nonterm) * beta * e_sp + np.log(nback)
    resid = f_s - f_sp * nonterm + logpf + const
    return resid.square().mean()


def fl_loss(rec: TransitionRecord, model, beta: float) -> Tensor:
    """Forward-looking residual squared for a single transition."""
    return transition_batch_loss([rec], model, beta, "fl")


def db_loss(rec: TransitionRecord, model, beta: float) -> Tensor:
    """Detailed-balance residual squared for a single transition."""
    return transition_batch_loss([rec], model, beta, "db")


def tb_loss(traj: Trajectory, model, log_z, beta: float) -> Tensor:
    """Trajectory-balance residual squared for a complete trajectory."""
    if not traj.actions:
        raise ValueError("trajectory has no transitions")
    g, task = traj.graph, traj.task
    s_labels = np.stack([s.labels for s in traj.states[:-1]])
    actions = np.array(traj.actions, dtype=np.int64)
    masks = batch_action_mask(g, s_labels, task)
    logits = model.forward_policy(g, s_labels)
    logpf = take_per_row(masked_log_softmax(logits, masks), actions).sum()

    if isinstance(log_z, LogZParam):
        log_z = log_z.value
    elif not isinstance(log_z, Tensor):
        log_z = Tensor(log_z)

    e_x = terminal_energy(g, traj.final_state, task)
    sum_log_nb = float(sum(np.log(num_backward_choices(s, task))
                           for s in traj.states[1:]))
    resid = log_z + logpf + (beta * e_x + sum_log_nb)
    return resid.square().reshape(())


def trajectory_loss(traj: Trajectory, model, beta: float, variant: str) -> Tensor:
    """Per-transition residuals of one trajectory, averaged."""
    return transition_batch_loss(traj.to_records(), model, beta, variant)
