"""Exact solvers, enumeration oracles and greedy baselines.

Everything here is desk-scale reference machinery: exhaustive subset
scans (vectorized over bit matrices) for small graphs, pruned search
for slightly larger ones, exact terminal-state distributions of a
policy via dynamic programming over the state DAG, and the Boltzmann
target distribution over reachable terminal states.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import env
from .autodiff import Tensor, no_grad
from .env import State, Task
from .graphs import Graph


@dataclass
class ExactResult:
    optimum: float
    num_optimal: int
    states: list[str] | None  # feasible complete assignments, small n only


@dataclass
class ExactDistribution:
    probs: dict[str, float]

    def support(self) -> set[str]:
        return set(self.probs)


def tv_distance(p, q) -> float:
    """Total variation distance between two state->probability mappings."""
    pd = p.probs if isinstance(p, ExactDistribution) else p
    qd = q.probs if isinstance(q, ExactDistribution) else q
    keys = set(pd) | set(qd)
    return 0.5 * sum(abs(pd.get(k, 0.0) - qd.get(k, 0.0)) for k in keys)


# -- exact optima ------------------------------------------------------


def _bit_matrix(n: int) -> np.ndarray:
    masks = np.arange(1 << n, dtype=np.uint32)
    return ((masks[:, None] >> np.arange(n, dtype=np.uint32)[None, :]) & 1
            ).astype(np.uint8)


def _scan_all_subsets(g: Graph, task: Task) -> tuple[np.ndarray, np.ndarray]:
    """(feasible, objective) arrays indexed by subset bitmask."""
    n = g.num_vertices
    bits = _bit_matrix(n)
    feasible = np.ones(1 << n, dtype=bool)
    if task is Task.MIS:
        for u, v in g.edges:
            feasible &= ~((bits[:, u] & bits[:, v]).astype(bool))
        objective = bits.sum(axis=1, dtype=np.int64)
    elif task is Task.MC:
        present = set(map(tuple, g.edges.tolist()))
        for u in range(n):
            for v in range(u + 1, n):
                if (u, v) not in present:
                    feasible &= ~((bits[:, u] & bits[:, v]).astype(bool))
        objective = bits.sum(axis=1, dtype=np.int64)
    elif task is Task.MDS:
        for v in range(n):
            closed = np.append(g.neighbors(v), v)
            feasible &= bits[:, closed].any(axis=1)
        objective = bits.sum(axis=1, dtype=np.int64)
    else:
        objective = np.zeros(1 << n, dtype=np.int64)
        for u, v in g.edges:
            objective += bits[:, u] ^ bits[:, v]
    return feasible, objective


def _mis_branch_and_bound(g: Graph) -> tuple[int, int]:
    """Max independent set size and count of maximum sets, via bitmasks."""
    nbr = g.neighbor_bitmasks()
    best = -1
    count = 0

    def rec(cand: int, size: int) -> None:
        nonlocal best, count
        if cand == 0:
            if size > best:
                best, count = size, 1
            elif size == best:
                count += 1
            return
        if size + cand.bit_count() < best:
            return
        # pivot on the most constrained candidate
        v, vdeg = -1, -1
        c = cand
        while c:
            u = (c & -c).bit_length() - 1
            d = (nbr[u] & cand).bit_count()
            if d > vdeg:
                v, vdeg = u, d
            c &= c - 1
        rec(cand & ~(nbr[v] | (1 << v)), size + 1)
        rec(cand & ~(1 << v), size)

    rec((1 << g.num_vertices) - 1, 0)
    return best, count


def _mds_increasing_k(g: Graph) -> tuple[int, int]:
    """Smallest dominating set size and count, by size-ordered scan."""
    n = g.num_vertices
    closed = [int(m) | (1 << v) for v, m in enumerate(g.neighbor_bitmasks())]
    full = (1 << n) - 1
    lower = -(-n // (1 + max(g.degree(v) for v in range(n))))
    for k in range(lower, n + 1):
        hits = 0
        for combo in itertools.combinations(range(n), k):
            cover = 0
            for v in combo:
                cover |= closed[v]
            if cover == full:
                hits += 1
        if hits:
            return k, hits
    raise RuntimeError("no dominating set found")  # unreachable


def _mcut_chunked(g: Graph) -> tuple[int, int]:
    """Max cut over all assignments, enumerated with vertex n-1 pinned."""
    n = g.num_vertices
    edges = g.edges
    best, count = -1, 0
    total = 1 << (n - 1)
    chunk = 1 << 20
    for start in range(0, total, chunk):
        masks = np.arange(start, min(start + chunk, total), dtype=np.uint64)
        cut = np.zeros(masks.shape[0], dtype=np.int64)
        for u, v in edges:
            cut += ((masks >> np.uint64(u)) ^ (masks >> np.uint64(v))).astype(np.int64) & 1
        m = int(cut.max())
        c = int((cut == m).sum())
        if m > best:
            best, count = m, c
        elif m == best:
            count += c
    return best, count * 2  # each cut counted once per side


def brute_force_optimum(g: Graph, task: Task, cap: int = 24,
                        states_cap: int = 16) -> ExactResult:
    """Exhaustive optimum over all feasible complete assignments.

    Raises for graphs above cap vertices; pass a larger cap explicitly
    to opt in.  The feasible-state list is built only up to states_cap.
    """
    n = g.num_vertices
    if n > cap:
        raise ValueError(f"graph has {n} vertices, above cap {cap}")

    if n <= states_cap:
        feasible, objective = _scan_all_subsets(g, task)
        obj = np.where(feasible, objective, np.iinfo(np.int64).min
                       if task.maximize else np.iinfo(np.int64).max)
        optimum = int(obj.max() if task.maximize else obj.min())
        num_optimal = int((obj == optimum).sum())
        bits = _bit_matrix(n)
        states = ["".join(str(b) for b in bits[m])
                  for m in np.nonzero(feasible)[0]]
        return ExactResult(float(optimum), num_optimal, states)

    if task is Task.MIS:
        best, cnt = _mis_branch_and_bound(g)
    elif task is Task.MC:
        from .graphs import complement
        best, cnt = _mis_branch_and_bound(complement(g))
    elif task is Task.MDS:
        best, cnt = _mds_increasing_k(g)
    else:
        best, cnt = _mcut_chunked(g)
    return ExactResult(float(best), cnt, None)


# -- policy and target distributions over terminal states --------------


def _row_log_probs(logits_row: np.ndarray, legal: np.ndarray) -> np.ndarray:
    z = logits_row[legal]
    z = z - z.max()
    ez = np.exp(z)
    return np.log(ez / ez.sum())


def exact_terminal_distribution(g: Graph, task: Task, model,
                                cap: int = 10) -> ExactDistribution:
    """Exact P(terminal state) under a policy, by DP over the state DAG.

    model=None means the uniform policy over legal actions.  States are
    processed in order of assigned-vertex count, which only grows along
    transitions.
    """
    n = g.num_vertices
    if n > cap:
        raise ValueError(f"graph has {n} vertices, above cap {cap}")
    s0 = env.initial_state(g, task)
    levels: list[dict[bytes, list]] = [dict() for _ in range(n + 1)]
    levels[0][s0.labels.tobytes()] = [s0, 1.0]
    terminals: dict[str, float] = {}

    for lvl in range(n + 1):
        entries = list(levels[lvl].values())
        if not entries:
            continue
        reachable = [e for e in entries if e[1] > 0.0]
        if not reachable:
            continue
        done = [e for e in reachable if e[0].is_terminal]
        for st, pr in done:
            terminals[st.to_string()] = terminals.get(st.to_string(), 0.0) + pr
        todo = [e for e in reachable if not e[0].is_terminal]
        if not todo:
            continue

        labels = np.stack([e[0].labels for e in todo])
        masks = env.batch_action_mask(g, labels, task)
        if model is not None:
            logits = np.empty_like(masks, dtype=np.float64)
            with no_grad():
                for i in range(0, len(todo), 512):
                    logits[i:i + 512] = model.forward_policy(
                        g, labels[i:i + 512]).data
        for row, (st, pr) in enumerate(todo):
            legal = np.nonzero(masks[row])[0]
            if legal.size == 0:
                if task is not Task.MDS:
                    raise RuntimeError("non-terminal state with no action")
                fin = env.finalize_mds(st)
                terminals[fin.to_string()] = (terminals.get(fin.to_string(), 0.0)
                                              + pr)
                continue
            if model is None:
                logp = np.full(legal.shape[0], -np.log(legal.shape[0]))
            else:
                logp = _row_log_probs(logits[row], legal)
            for a, lp in zip(legal, logp):
                child = env.step(g, st, int(a), task).state
                key = child.labels.tobytes()
                lv = n - child.num_void
                slot = levels[lv].get(key)
                if slot is None:
                    levels[lv][key] = [child, pr * float(np.exp(lp))]
                else:
                    slot[1] += pr * float(np.exp(lp))
    return ExactDistribution(terminals)


def reachable_terminals(g: Graph, task: Task, cap: int = 16) -> list[State]:
    """All complete assignments reachable in the MDP, by DAG traversal."""
    n = g.num_vertices
    if n > cap:
        raise ValueError(f"graph has {n} vertices, above cap {cap}")
    s0 = env.initial_state(g, task)
    seen = {s0.labels.tobytes()}
    stack = [s0]
    out: dict[bytes, State] = {}
    while stack:
        s = stack.pop()
        if s.is_terminal:
            out[s.labels.tobytes()] = s
            continue
        children = env.enumerate_children(g, s, task)
        if not children:
            if task is not Task.MDS:
                raise RuntimeError("non-terminal state with no action")
            fin = env.finalize_mds(s)
            out[fin.labels.tobytes()] = fin
            continue
        for _, child in children:
            key = child.labels.tobytes()
            if key not in seen:
                seen.add(key)
                stack.append(child)
    return list(out.values())


def target_distribution(g: Graph, task: Task, beta: float,
                        cap: int = 16) -> ExactDistribution:
    """Boltzmann distribution exp(-beta * E) over reachable terminals."""
    if beta < 0:
        raise ValueError("beta must be >= 0")
    terms = reachable_terminals(g, task, cap)
    log_w = np.array([-beta * env.terminal_energy(g, x, task) for x in terms])
    log_w -= log_w.max()
    w = np.exp(log_w)
    w /= w.sum()
    return ExactDistribution({x.to_string(): float(p)
                              for x, p in zip(terms, w)})


# -- greedy baselines --------------------------------------------------


def greedy(g: Graph, task: Task,
           rng: np.random.Generator | None = None) -> tuple[State, float]:
    """Myopic baseline run through the same MDP; ties break to low index."""
    del rng  # deterministic tie-breaking; kept for interface symmetry
    adj = g.dense_adjacency()
    s = env.initial_state(g, task)
    while not s.is_terminal:
        mask = env.action_mask(g, s, task)
        legal = np.nonzero(mask)[0]
        if legal.size == 0:
            if task is not Task.MDS:
                raise RuntimeError("non-terminal state with no action")
            s = env.finalize_mds(s)
            break
        if task in (Task.MIS, Task.MDS):
            void_deg = adj[legal] @ (s.labels == env.VOID)
            pick = legal[int(np.argmin(void_deg))]
        elif task is Task.MC:
            cand = np.zeros(g.num_vertices)
            cand[legal] = 1.0
            cand_deg = adj[legal] @ cand
            pick = legal[int(np.argmax(cand_deg))]
        else:
            gain = adj[legal] @ np.ones(g.num_vertices) \
                - 2.0 * (adj[legal] @ (s.labels == env.ONE))
            pick = legal[int(np.argmax(gain))]
        s = env.step(g, s, int(pick), task).state
    return s, env.objective_value(g, s, task)


# -- exact balanced reference policy -----------------------------------


class ExactBalancedModel:
    """Tabular policy/flow pair with zero flow-matching loss everywhere.

    Solved by backward induction over the reachable state DAG: terminal
    log-flow is -beta * E(x), interior log-flow aggregates children via
    the uniform backward policy, and the forward policy is the flow
    ratio.  Useful as a ground-truth stand-in wherever a PolicyModel is
    accepted; exposes log_partition = log F(s0).
    """

    def __init__(self, g: Graph, task: Task, beta: float, cap: int = 12):
        n = g.num_vertices
        if n > cap:
            raise ValueError(f"graph has {n} vertices, above cap {cap}")
        self.graph = g
        self.task = task
        self.beta = beta

        s0 = env.initial_state(g, task)
        seen = {s0.labels.tobytes(): s0}
        order = [s0]
        children_of: dict[bytes, list[tuple[int, bytes]]] = {}
        i = 0
        while i < len(order):
            s = order[i]
            i += 1
            if s.is_terminal:
                continue
            kids = env.enumerate_children(g, s, task)
            if not kids and task is Task.MDS:
                fin = env.finalize_mds(s)
                kids = [(-1, fin)]
            children_of[s.labels.tobytes()] = [(a, c.labels.tobytes())
                                               for a, c in kids]
            for _, c in kids:
                key = c.labels.tobytes()
                if key not in seen:
                    seen[key] = c
                    order.append(c)

        log_f: dict[bytes, float] = {}
        for s in sorted(order, key=lambda st: st.num_void):
            key = s.labels.tobytes()
            if s.is_terminal:
                log_f[key] = -beta * env.terminal_energy(g, s, task)
                continue
            terms = []
            for a, ck in children_of[key]:
                child = seen[ck]
                # a < 0 marks the forced MDS closure, taken with certainty
                log_pb = 0.0 if a < 0 \
                    else -np.log(env.num_backward_choices(child, task))
                terms.append(log_f[ck] + log_pb)
            m = max(terms)
            log_f[key] = m + float(np.log(np.exp(np.array(terms) - m).sum()))

        self._log_f = log_f
        self._states = seen
        self._children = children_of
        self._policy: dict[bytes, np.ndarray] = {}
        for key, kids in children_of.items():
            row = np.full(n, -np.inf)
            for a, ck in kids:
                if a < 0:
                    continue
                child = seen[ck]
                log_pb = -np.log(env.num_backward_choices(child, task))
                row[a] = log_f[ck] + log_pb - log_f[key]
            self._policy[key] = row
        self.log_partition = log_f[s0.labels.tobytes()]

    def forward_policy(self, g: Graph, labels: np.ndarray) -> Tensor:
        labels = np.asarray(labels, dtype=np.int8)
        rows = [self._policy[labels[b].tobytes()] for b in range(labels.shape[0])]
        return Tensor(np.stack(rows))

    def forward_flow(self, g: Graph, labels: np.ndarray) -> Tensor:
        """Correction flow log F~(s) = log F(s) + beta * E~(s); 0 at terminals."""
        labels = np.asarray(labels, dtype=np.int8)
        out = np.empty(labels.shape[0])
        for b in range(labels.shape[0]):
            st = self._states[labels[b].tobytes()]
            out[b] = (self._log_f[st.labels.tobytes()]
                      + self.beta * env.intermediate_energy(g, st, self.task))
        return Tensor(out)
