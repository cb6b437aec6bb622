import numpy as np
import pytest

from gflowcomb.env import (
    ONE,
    VOID,
    ZERO,
    State,
    Task,
    action_mask,
    batch_action_mask,
    enumerate_children,
    finalize_mds,
    initial_state,
    intermediate_energy,
    num_backward_choices,
    objective_value,
    step,
    terminal_energy,
)
from gflowcomb.graphs import Graph, complement

from conftest import complete_graph, path_graph, random_graph, star_graph


def uniform_rollout(g, task, rng):
    """Random legal trajectory; returns the list of visited states."""
    s = initial_state(g, task)
    states = [s]
    while not s.is_terminal:
        mask = action_mask(g, s, task)
        legal = np.nonzero(mask)[0]
        if legal.size == 0:
            assert task is Task.MDS
            s = finalize_mds(s)
            states.append(s)
            break
        s = step(g, s, int(rng.choice(legal)), task).state
        states.append(s)
    return states


def test_state_basics():
    s = State(np.array([1, 2, 0, 2], dtype=np.int8))
    assert (s.num_zero, s.num_one, s.num_void) == (1, 1, 2)
    assert not s.is_terminal
    assert s.to_string() == "1-0-"
    with pytest.raises(ValueError):
        s.labels[0] = 0  # read-only


def test_initial_state_all_void():
    g = path_graph(4)
    s = initial_state(g, Task.MIS)
    assert s.to_string() == "----"
    assert s.num_void == 4 and not s.is_terminal


def test_task_maximize_flags():
    assert Task.MIS.maximize and Task.MC.maximize and Task.MCUT.maximize
    assert not Task.MDS.maximize


# -- frozen single-step examples ------------------------------------------

def test_mis_step_center_of_path():
    g = path_graph(3)
    r = step(g, initial_state(g, Task.MIS), 1, Task.MIS)
    assert r.state.to_string() == "010"
    assert r.forced == [(0, ZERO), (2, ZERO)]
    assert r.terminal


def test_mis_step_end_of_path():
    g = path_graph(3)
    r = step(g, initial_state(g, Task.MIS), 0, Task.MIS)
    assert r.state.to_string() == "10-"
    assert r.forced == [(1, ZERO)]
    assert not r.terminal
    r2 = step(g, r.state, 2, Task.MIS)
    assert r2.state.to_string() == "101" and r2.terminal


def test_mc_step_forces_non_common_neighbors():
    g = path_graph(3)
    r = step(g, initial_state(g, Task.MC), 0, Task.MC)
    assert r.state.to_string() == "1-0"
    assert r.forced == [(2, ZERO)]
    r2 = step(g, r.state, 1, Task.MC)
    assert r2.state.to_string() == "110" and r2.terminal


def test_mds_remove_center_of_star():
    g = star_graph(3)
    r = step(g, initial_state(g, Task.MDS), 0, Task.MDS)
    assert r.state.to_string() == "0111"
    assert r.forced == [(1, ONE), (2, ONE), (3, ONE)]
    assert r.terminal


def test_mds_remove_leaf_forces_center():
    g = star_graph(3)
    r = step(g, initial_state(g, Task.MDS), 1, Task.MDS)
    assert r.state.to_string() == "10--"
    assert r.forced == [(0, ONE)]
    # remaining leaves are each removable in turn
    r2 = step(g, r.state, 2, Task.MDS)
    assert r2.state.to_string() == "100-"
    r3 = step(g, r2.state, 3, Task.MDS)
    assert r3.state.to_string() == "1000" and r3.terminal


def test_mcut_forces_strict_majority_only():
    g = complete_graph(3)
    r = step(g, initial_state(g, Task.MCUT), 0, Task.MCUT)
    # each other vertex has 1 of 2 neighbors included: a tie, not forced
    assert r.state.to_string() == "1--"
    assert r.forced == []
    r2 = step(g, r.state, 1, Task.MCUT)
    assert r2.state.to_string() == "110"
    assert r2.forced == [(2, ZERO)]


def test_step_rejects_bad_actions():
    g = path_graph(3)
    with pytest.raises(IndexError):
        step(g, initial_state(g, Task.MIS), 3, Task.MIS)
    s = step(g, initial_state(g, Task.MIS), 0, Task.MIS).state  # "10-"
    with pytest.raises(ValueError, match="illegal"):
        step(g, s, 1, Task.MIS)  # already forced to 0
    with pytest.raises(ValueError, match="illegal"):
        step(g, s, 0, Task.MIS)  # already chosen


# -- action masks ---------------------------------------------------------

def test_action_mask_void_only():
    g = path_graph(3)
    s = step(g, initial_state(g, Task.MIS), 0, Task.MIS).state
    assert action_mask(g, s, Task.MIS).tolist() == [False, False, True]


def test_mds_mask_protects_sole_dominator():
    g = star_graph(3)
    s = State(np.array([VOID, ZERO, ZERO, ZERO], dtype=np.int8))
    # center is the only cover left for every leaf: nothing is removable
    assert not action_mask(g, s, Task.MDS).any()


def test_mds_mask_all_legal_at_start_without_isolated():
    g = path_graph(4)
    assert action_mask(g, initial_state(g, Task.MDS), Task.MDS).all()


def test_mds_mask_excludes_isolated_at_start():
    g = Graph(3, [(0, 1)])
    mask = action_mask(g, initial_state(g, Task.MDS), Task.MDS)
    assert mask.tolist() == [True, True, False]


def test_finalize_mds_empty_graph():
    g = Graph(3, [])
    s = initial_state(g, Task.MDS)
    assert not action_mask(g, s, Task.MDS).any()
    t = finalize_mds(s)
    assert t.to_string() == "111" and t.is_terminal


def test_batch_action_mask_matches_scalar(rng):
    for _ in range(20):
        g = random_graph(8, 0.4, rng)
        labels = rng.integers(0, 3, size=(12, 8)).astype(np.int8)
        for task in Task:
            got = batch_action_mask(g, labels, task)
            want = np.stack(
                [action_mask(g, State(row), task) for row in labels]
            )
            assert np.array_equal(got, want), task


# -- energies and objectives ----------------------------------------------

def test_terminal_energy_examples():
    p3 = path_graph(3)
    assert terminal_energy(p3, State(np.array([1, 0, 1])), Task.MIS) == -2.0
    assert terminal_energy(p3, State(np.array([0, 1, 0])), Task.MIS) == -1.0
    assert terminal_energy(p3, State(np.array([1, 1, 0])), Task.MC) == -2.0
    star = star_graph(3)
    assert terminal_energy(star, State(np.array([0, 1, 1, 1])), Task.MDS) == 3.0
    assert terminal_energy(star, State(np.array([1, 0, 0, 0])), Task.MDS) == 1.0
    assert terminal_energy(p3, State(np.array([1, 0, 1])), Task.MCUT) == -2.0
    k3 = complete_graph(3)
    assert terminal_energy(k3, State(np.array([1, 1, 0])), Task.MCUT) == -2.0


def test_terminal_energy_requires_complete():
    g = path_graph(3)
    with pytest.raises(ValueError):
        terminal_energy(g, initial_state(g, Task.MIS), Task.MIS)


def test_intermediate_energy_partial_cut():
    k3 = complete_graph(3)
    s = State(np.array([1, 2, 2], dtype=np.int8))
    # both edges at vertex 0 count; the undecided pair does not
    assert intermediate_energy(k3, s, Task.MCUT) == -2.0


def test_intermediate_energy_counts_ones():
    g = path_graph(4)
    s = State(np.array([1, 2, 1, 2], dtype=np.int8))
    assert intermediate_energy(g, s, Task.MIS) == -2.0
    assert intermediate_energy(g, s, Task.MDS) == 2.0


def test_intermediate_matches_terminal_when_complete(rng):
    for _ in range(20):
        g = random_graph(7, 0.4, rng)
        for task in Task:
            x = uniform_rollout(g, task, rng)[-1]
            assert intermediate_energy(g, x, task) == terminal_energy(g, x, task)


def test_objective_value_examples():
    p3 = path_graph(3)
    assert objective_value(p3, State(np.array([1, 0, 1])), Task.MIS) == 2.0
    assert objective_value(p3, State(np.array([0, 1, 0])), Task.MCUT) == 2.0
    star = star_graph(3)
    assert objective_value(star, State(np.array([1, 0, 0, 0])), Task.MDS) == 1.0


# -- backward choices -----------------------------------------------------

def test_num_backward_choices():
    assert num_backward_choices(State(np.array([1, 0, 1])), Task.MIS) == 2
    assert num_backward_choices(State(np.array([1, 0, 2], dtype=np.int8)), Task.MC) == 1
    # mds counts removals, not members
    assert num_backward_choices(State(np.array([1, 0, 0, 2], dtype=np.int8)), Task.MDS) == 2
    with pytest.raises(ValueError):
        num_backward_choices(State(np.array([2, 2], dtype=np.int8)), Task.MIS)


def test_enumerate_children_path_mis():
    g = path_graph(3)
    kids = enumerate_children(g, initial_state(g, Task.MIS), Task.MIS)
    assert [(v, s.to_string()) for v, s in kids] == [
        (0, "10-"),
        (1, "010"),
        (2, "-01"),
    ]


# -- trajectory invariants ------------------------------------------------

def _check_terminal_feasible(g, x, task):
    labels = x.labels
    ones = np.nonzero(labels == ONE)[0]
    zeros = np.nonzero(labels == ZERO)[0]
    adj = g.dense_adjacency()
    if task is Task.MIS:
        for u in ones:
            assert not any(labels[w] == ONE for w in g.neighbors(u))
        for u in zeros:  # maximal: every excluded vertex is blocked
            assert any(labels[w] == ONE for w in g.neighbors(u))
    elif task is Task.MC:
        for u in ones:
            for w in ones:
                if u < w:
                    assert g.are_adjacent(int(u), int(w))
        for u in zeros:  # maximal clique
            assert any(labels[w] == ONE and not g.are_adjacent(int(u), int(w))
                       for w in range(g.num_vertices))
    elif task is Task.MDS:
        in_set = (labels == ONE).astype(float)
        a_self = g.dense_adjacency_with_self()
        assert (a_self @ in_set > 0).all()  # dominating
        for u in ones:  # minimal: no member is redundant
            trial = in_set.copy()
            trial[u] = 0.0
            assert not (a_self @ trial > 0).all()
    else:
        in_one = (labels == ONE).astype(float)
        gain = adj.sum(axis=1) - 2.0 * (adj @ in_one)
        # moving any excluded vertex across strictly shrinks the cut
        assert (gain[zeros] < 0).all()


def test_rollout_terminals_are_feasible(rng):
    for _ in range(25):
        g = random_graph(int(rng.integers(3, 10)), 0.4, rng)
        for task in Task:
            _check_terminal_feasible(g, uniform_rollout(g, task, rng)[-1], task)


def test_rollout_labels_monotone(rng):
    for _ in range(10):
        g = random_graph(8, 0.35, rng)
        for task in Task:
            states = uniform_rollout(g, task, rng)
            assert len(states) <= g.num_vertices + 1
            for a, b in zip(states, states[1:]):
                decided = a.labels != VOID
                assert np.array_equal(a.labels[decided], b.labels[decided])
                assert b.num_void < a.num_void


def test_mis_equals_clique_on_complement(rng):
    for _ in range(15):
        g = random_graph(7, 0.5, rng)
        h = complement(g)
        s = initial_state(g, Task.MIS)
        t = initial_state(h, Task.MC)
        while not s.is_terminal:
            legal = np.nonzero(action_mask(g, s, Task.MIS))[0]
            v = int(rng.choice(legal))
            s = step(g, s, v, Task.MIS).state
            t = step(h, t, v, Task.MC).state
            assert np.array_equal(s.labels, t.labels)
