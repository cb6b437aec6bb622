"""Sequential construction MDPs for the four graph problems.

A state labels every vertex 0 (excluded), 1 (included) or 2 (undecided,
shown as "-" in dumps).  Every action names an undecided vertex; the
step then deterministically relabels other undecided vertices whose
assignment has become forced, so every reachable complete assignment is
feasible for its problem:

  mis   chosen vertex -> 1, undecided neighbors -> 0.
  mc    chosen vertex -> 1, undecided vertices not adjacent to every
        included vertex -> 0.
  mds   chosen vertex -> 0 (removal, legal only while the non-excluded
        set still dominates), undecided vertices whose removal would
        now break domination -> 1.
  mcut  chosen vertex -> 1, undecided vertices whose inclusion would
        strictly shrink the cut -> 0 (ties stay undecided).

States are immutable; step returns a fresh State.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .graphs import Graph

ZERO, ONE, VOID = 0, 1, 2


class Task(enum.Enum):
    MIS = "mis"
    MC = "mc"
    MDS = "mds"
    MCUT = "mcut"

    @property
    def maximize(self) -> bool:
        """Whether the natural objective (set size / cut size) is maximized."""
        return self is not Task.MDS


class State:
    """Vertex labels plus cached label counts."""

    __slots__ = ("labels", "num_zero", "num_one", "num_void", "graph_id")

    def __init__(self, labels: np.ndarray, graph_id: str = ""):
        labels = np.asarray(labels, dtype=np.int8)
        labels.setflags(write=False)
        self.labels = labels
        counts = np.bincount(labels, minlength=3)
        self.num_zero = int(counts[ZERO])
        self.num_one = int(counts[ONE])
        self.num_void = int(counts[VOID])
        self.graph_id = graph_id

    @property
    def is_terminal(self) -> bool:
        return self.num_void == 0

    def to_string(self) -> str:
        return "".join("-" if v == VOID else str(v) for v in self.labels)

    def __repr__(self) -> str:
        return f"State({self.to_string()})"


@dataclass
class StepResult:
    state: State
    forced: list[tuple[int, int]]
    terminal: bool


def initial_state(g: Graph, task: Task) -> State:
    return State(np.full(g.num_vertices, VOID, dtype=np.int8), g.graph_id)


def _mds_non_removable(g: Graph, labels: np.ndarray) -> np.ndarray:
    """Bool mask of vertices whose removal would break domination.

    A vertex u (currently non-excluded) is non-removable iff some vertex
    in its closed neighborhood is dominated only by u, i.e. has exactly
    one non-excluded closed neighbor.
    """
    a_self = g.dense_adjacency_with_self()
    in_set = (labels != ZERO).astype(np.float64)
    cover = a_self @ in_set
    critical = (cover == 1.0).astype(np.float64)
    return (a_self @ critical) > 0.0


def action_mask(g: Graph, s: State, task: Task) -> np.ndarray:
    """Bool mask of legal actions (always a subset of undecided vertices)."""
    void = s.labels == VOID
    if task is Task.MDS:
        return void & ~_mds_non_removable(g, s.labels)
    return void


def batch_action_mask(g: Graph, labels: np.ndarray, task: Task) -> np.ndarray:
    """action_mask over a (B, n) label batch, vectorized."""
    void = labels == VOID
    if task is not Task.MDS:
        return void
    a_self = g.dense_adjacency_with_self()
    in_set = (labels != ZERO).astype(np.float64)
    cover = in_set @ a_self  # symmetric matrix
    critical = (cover == 1.0).astype(np.float64)
    return void & ~((critical @ a_self) > 0.0)


def step(g: Graph, s: State, v: int, task: Task) -> StepResult:
    """Apply action v; relabel newly forced vertices; report terminality."""
    if not 0 <= v < g.num_vertices:
        raise IndexError(f"vertex {v} out of range")
    if not action_mask(g, s, task)[v]:
        raise ValueError(f"illegal action {v} in state {s.to_string()}")

    labels = s.labels.copy()
    forced: list[tuple[int, int]] = []

    if task is Task.MIS:
        labels[v] = ONE
        for u in g.neighbors(v):
            if labels[u] == VOID:
                labels[u] = ZERO
                forced.append((int(u), ZERO))
    elif task is Task.MC:
        labels[v] = ONE
        ones = (labels == ONE).astype(np.float64)
        num_ones = ones.sum()
        adj_ones = g.dense_adjacency() @ ones
        for u in np.nonzero(labels == VOID)[0]:
            if adj_ones[u] < num_ones:
                labels[u] = ZERO
                forced.append((int(u), ZERO))
    elif task is Task.MDS:
        labels[v] = ZERO
        non_removable = _mds_non_removable(g, labels)
        for u in np.nonzero((labels == VOID) & non_removable)[0]:
            labels[u] = ONE
            forced.append((int(u), ONE))
    else:  # MCUT
        labels[v] = ONE
        ones = (labels == ONE).astype(np.float64)
        adj_ones = g.dense_adjacency() @ ones
        degs = g.dense_adjacency().sum(axis=1)
        for u in np.nonzero(labels == VOID)[0]:
            if 2.0 * adj_ones[u] > degs[u]:
                labels[u] = ZERO
                forced.append((int(u), ZERO))

    nxt = State(labels, s.graph_id)
    return StepResult(nxt, forced, nxt.is_terminal)


def finalize_mds(s: State) -> State:
    """All-undecided-to-1 closure for MDS states with no legal action.

    Only occurs before the first removal on degenerate graphs (isolated
    vertices); after any step every remaining undecided vertex is
    removable by construction.
    """
    labels = s.labels.copy()
    labels[labels == VOID] = ONE
    return State(labels, s.graph_id)


def terminal_energy(g: Graph, x: State, task: Task) -> float:
    """Energy of a complete assignment (lower is better)."""
    if not x.is_terminal:
        raise ValueError("terminal_energy needs a complete assignment")
    if task is Task.MIS or task is Task.MC:
        return -float(x.num_one)
    if task is Task.MDS:
        return float(x.num_one)
    return -_cut_size(g, x.labels)


def _cut_size(g: Graph, labels: np.ndarray) -> float:
    if g.num_edges == 0:
        return 0.0
    u, v = g.edges[:, 0], g.edges[:, 1]
    return float(np.sum((labels[u] == ONE) != (labels[v] == ONE)))


def intermediate_energy(g: Graph, s: State, task: Task) -> float:
    """Partial-state energy proxy; agrees with terminal_energy when complete."""
    if task is Task.MIS or task is Task.MC:
        return -float(s.num_one)
    if task is Task.MDS:
        return float(s.num_one)
    # edges between included vertices and everything else
    return -_cut_size(g, s.labels)


def num_backward_choices(s: State, task: Task) -> int:
    """Size of the chosen-vertex set the uniform backward policy draws from."""
    k = s.num_zero if task is Task.MDS else s.num_one
    if k < 1:
        raise ValueError("state has no chosen vertex")
    return k


def enumerate_children(g: Graph, s: State, task: Task) -> list[tuple[int, State]]:
    """All (action, successor) pairs from s."""
    mask = action_mask(g, s, task)
    return [(int(v), step(g, s, int(v), task).state) for v in np.nonzero(mask)[0]]


def objective_value(g: Graph, x: State, task: Task) -> float:
    """Natural objective: set size for mis/mc/mds, cut size for mcut."""
    if task is Task.MCUT:
        return _cut_size(g, x.labels)
    return float(x.num_one)
