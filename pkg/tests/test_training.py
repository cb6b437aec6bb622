import numpy as np
import pytest

from gflowcomb.env import Task, objective_value
from gflowcomb.nn import GinConfig
from gflowcomb.oracle import ExactBalancedModel
from gflowcomb.training import (
    TrainConfig,
    beta_schedule,
    rollout,
    sample_best_of_k,
    train,
)

from conftest import complete_graph, path_graph, star_graph

TINY = GinConfig(num_layers=1, hidden_dim=8)


def tiny_cfg(**kw):
    kw.setdefault("gin", TINY)
    kw.setdefault("epochs", 2)
    kw.setdefault("beta", 2.0)
    return TrainConfig(**kw)


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(loss="huber")
    with pytest.raises(ValueError):
        TrainConfig(level="graph")
    with pytest.raises(ValueError):
        TrainConfig(beta=0.0)
    with pytest.raises(ValueError):
        TrainConfig(anneal_frac=1.5)
    with pytest.raises(ValueError):
        TrainConfig(explore_eps=-0.1)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(num_updates=-1)


def test_tb_implies_trajectory_level():
    cfg = TrainConfig(loss="tb", level="transition")
    assert cfg.level == "trajectory"


def test_config_to_dict_round_trips_gin():
    cfg = tiny_cfg()
    d = cfg.to_dict()
    assert d["gin"] == {"num_layers": 1, "hidden_dim": 8}
    assert d["loss"] == "fl" and d["epochs"] == 2


def test_beta_schedule_shape():
    assert beta_schedule(100.0, 0.5, 0.0) == 1.0
    assert beta_schedule(100.0, 0.5, 0.25) == 1.0 + 99.0 * 0.5
    assert beta_schedule(100.0, 0.5, 0.5) == 100.0
    assert beta_schedule(100.0, 0.5, 0.9) == 100.0
    assert beta_schedule(100.0, 0.0, 0.0) == 100.0  # no ramp


def test_uniform_rollout_hits_markov_frequencies(rng):
    # on the 3-path the uniform policy reaches "101" twice as often as "010"
    g = path_graph(3)
    n = 3000
    hits = sum(rollout(g, Task.MIS, None, 0.0, rng).final_state.to_string()
               == "101" for _ in range(n))
    p = hits / n
    sigma = np.sqrt((2 / 3) * (1 / 3) / n)
    assert abs(p - 2 / 3) < 3 * sigma


def test_rollout_on_clique_is_one_step(rng):
    g = complete_graph(4)
    traj = rollout(g, Task.MIS, None, 0.0, rng)
    assert len(traj.actions) == 1
    assert traj.final_state.num_one == 1


def test_full_exploration_flattens_policy(rng):
    # eps=1 ignores a sharply peaked model
    g = path_graph(3)
    model = ExactBalancedModel(g, Task.MIS, beta=5.0)
    n = 1000
    hits = sum(rollout(g, Task.MIS, model, 1.0, rng).final_state.to_string()
               == "010" for _ in range(n))
    p = hits / n
    sigma = np.sqrt((1 / 3) * (2 / 3) / n)
    assert abs(p - 1 / 3) < 3 * sigma


def test_sharp_model_rollout_prefers_optimum(rng):
    g = path_graph(3)
    model = ExactBalancedModel(g, Task.MIS, beta=5.0)
    hits = sum(rollout(g, Task.MIS, model, 0.0, rng).final_state.to_string()
               == "101" for _ in range(200))
    assert hits >= 190  # target mass is e^10 / (e^10 + e^5) > 0.99


def test_train_rejects_empty_dataset():
    with pytest.raises(ValueError):
        train([], Task.MIS, tiny_cfg())


def test_zero_updates_returns_fresh_model():
    g = path_graph(4)
    model, rows = train([g], Task.MIS, tiny_cfg(num_updates=0))
    assert rows == []
    named = dict(model.named_parameters())
    assert np.allclose(named["policy.head.w"].data, 0.0)
    assert np.allclose(named["flow.head.w"].data, 0.0)


def test_training_is_deterministic():
    gs = [path_graph(4), path_graph(5)]
    cfg = tiny_cfg(epochs=3, seed=42)
    model_a, rows_a = train(gs, Task.MIS, cfg)
    model_b, rows_b = train(gs, Task.MIS, cfg)
    assert len(rows_a) == len(rows_b) > 0
    for ra, rb in zip(rows_a, rows_b):
        assert (ra.update, ra.epoch, ra.loss, ra.beta, ra.mean_objective) \
            == (rb.update, rb.epoch, rb.loss, rb.beta, rb.mean_objective)
    for (na, ta), (nb, tb) in zip(model_a.named_parameters(),
                                  model_b.named_parameters()):
        assert na == nb and np.array_equal(ta.data, tb.data)


def test_log_rows_structure():
    gs = [path_graph(4)] * 3
    model, rows = train(gs, Task.MIS, tiny_cfg(epochs=2))
    # one batch per visit at this batch size: 3 graphs x 2 epochs
    assert [r.update for r in rows] == list(range(1, 7))
    assert all(rows[i].epoch <= rows[i + 1].epoch for i in range(len(rows) - 1))
    assert all(np.isfinite(r.loss) for r in rows)
    assert all(r.wall_ms >= 0 for r in rows)
    assert all(1.0 <= r.beta <= 2.0 for r in rows)
    assert 1.0 <= rows[-1].mean_objective <= 2.0  # p4 sets have size 1 or 2


def test_anneal_reaches_target_exactly():
    g = path_graph(3)
    cfg = tiny_cfg(num_updates=10, anneal_frac=0.5, beta=21.0, epochs=1)
    _, rows = train([g], Task.MIS, cfg)
    betas = [r.beta for r in rows]
    assert len(betas) == 10
    assert betas[0] == 1.0
    assert all(b2 >= b1 for b1, b2 in zip(betas, betas[1:]))
    assert betas[5:] == [21.0] * 5  # progress >= frac pins the target


def test_num_updates_caps_work(rng):
    gs = [path_graph(4)] * 5
    _, rows = train(gs, Task.MIS, tiny_cfg(num_updates=7, epochs=1))
    assert len(rows) == 7


def test_tb_training_runs():
    g = path_graph(4)
    model, rows = train([g], Task.MIS, tiny_cfg(loss="tb", epochs=2))
    assert len(rows) == 2
    assert all(np.isfinite(r.loss) for r in rows)


def test_trajectory_level_fl_runs():
    g = path_graph(4)
    _, rows = train([g], Task.MIS, tiny_cfg(loss="fl", level="trajectory"))
    assert len(rows) == 2


def test_mds_training_runs():
    g = star_graph(3)
    _, rows = train([g], Task.MDS, tiny_cfg(loss="db", epochs=2))
    assert len(rows) == 2


def test_callback_sees_every_update():
    g = path_graph(4)
    seen = []
    train([g], Task.MIS, tiny_cfg(num_updates=5, epochs=1),
          callback=lambda u, m: seen.append(u))
    assert seen == [1, 2, 3, 4, 5]


def test_sample_best_of_k_uniform_finds_optimum(rng):
    g = path_graph(3)
    state, value = sample_best_of_k(g, Task.MIS, None, 50, rng)
    assert value == 2.0 and state.to_string() == "101"


def test_sample_best_of_k_minimizes_for_mds(rng):
    g = star_graph(3)
    state, value = sample_best_of_k(g, Task.MDS, None, 30, rng)
    assert value == 1.0 and state.to_string() == "1000"


def test_sample_best_of_k_deterministic():
    g = path_graph(5)
    a = sample_best_of_k(g, Task.MIS, None, 8, np.random.default_rng(3))
    b = sample_best_of_k(g, Task.MIS, None, 8, np.random.default_rng(3))
    assert a[1] == b[1]
    assert a[0].to_string() == b[0].to_string()


def test_sample_best_of_k_validates_k(rng):
    with pytest.raises(ValueError):
        sample_best_of_k(path_graph(3), Task.MIS, None, 0, rng)


def test_sample_best_of_k_with_model(rng):
    g = path_graph(5)
    model = ExactBalancedModel(g, Task.MIS, beta=4.0)
    state, value = sample_best_of_k(g, Task.MIS, model, 10, rng)
    assert value == 3.0  # the unique optimum 10101 dominates at this beta
