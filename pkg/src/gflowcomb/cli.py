"""Command line entry point.

Subcommands: gen (datasets), train, eval (best-of-k vs greedy and small
graph exact optima), oracle (exact optima + greedy per instance) and
distcheck (exact policy distribution vs the Boltzmann target).

A config file of key=value lines can seed any long flag; explicit
flags win.  Operational failures exit 1 with a single stderr line.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import oracle as orc
from .dataset import load_dataset, save_dataset
from .env import Task
from .generators import GenSpec, gen_dataset
from .nn import GinConfig, load_checkpoint, save_checkpoint
from .training import TrainConfig, sample_best_of_k, train


def _parse_range(text) -> tuple[int, int]:
    text = str(text)  # config files may deliver bare ints
    if ".." in text:
        lo, hi = text.split("..", 1)
        return int(lo), int(hi)
    v = int(text)
    return v, v


def _load_config_defaults(argv: list[str]) -> dict:
    if "--config" not in argv:
        return {}
    path = argv[argv.index("--config") + 1]
    defaults = {}
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected key=value")
            key, val = line.split("=", 1)
            key = key.strip().replace("-", "_")
            val = val.strip()
            try:
                defaults[key] = json.loads(val)
            except json.JSONDecodeError:
                defaults[key] = val
    return defaults


def _build_parser() -> tuple[argparse.ArgumentParser, list]:
    p = argparse.ArgumentParser(prog="gflowcomb")
    p.add_argument("--config", metavar="FILE",
                   help="key=value file supplying flag defaults")
    sub = p.add_subparsers(dest="command", required=True)
    subparsers = []

    def add_task(sp):
        sp.add_argument("--task", choices=["mis", "mc", "mds", "mcut"],
                        default=None)

    g = sub.add_parser("gen", help="generate a dataset file")
    subparsers.append(g)
    g.add_argument("--family", choices=["ba", "er", "rb"], default=None)
    g.add_argument("--n", default="10", help="vertex count or range A..B")
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--m", type=int, default=4, help="ba attachment edges")
    g.add_argument("--p", type=float, default=0.5, help="er edge probability")
    g.add_argument("--groups", default="3..5", help="rb group count range")
    g.add_argument("--group-size", default="3..6", help="rb group size range")
    g.add_argument("--rounds", type=int, default=None,
                   help="rb inter-group edge rounds")
    g.add_argument("--out", default=None)

    t = sub.add_parser("train", help="train a policy on a dataset")
    subparsers.append(t)
    add_task(t)
    t.add_argument("--data", default=None)
    t.add_argument("--loss", choices=["fl", "db", "tb"], default="fl")
    lvl = t.add_mutually_exclusive_group()
    lvl.add_argument("--transition", dest="level", action="store_const",
                     const="transition")
    lvl.add_argument("--trajectory", dest="level", action="store_const",
                     const="trajectory")
    t.set_defaults(level="transition")
    t.add_argument("--beta", type=float, default=500.0)
    t.add_argument("--anneal-frac", type=float, default=0.5)
    t.add_argument("--eps", type=float, default=0.0,
                   help="uniform exploration mix-in")
    t.add_argument("--batch", type=int, default=64)
    t.add_argument("--epochs", type=int, default=20)
    t.add_argument("--updates", type=int, default=None,
                   help="hard update budget, overrides --epochs")
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--rollouts", type=int, default=1)
    t.add_argument("--hidden", type=int, default=256)
    t.add_argument("--layers", type=int, default=5)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", default=None, help="checkpoint path")
    t.add_argument("--log", default=None,
                   help="training log csv (default <out>.log.csv)")

    e = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    subparsers.append(e)
    e.add_argument("--data", default=None)
    e.add_argument("--ckpt", default=None)
    e.add_argument("--k", type=int, default=20, help="samples per instance")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--oracle-cap", type=int, default=20,
                   help="exact optimum for graphs up to this size, 0 disables")
    e.add_argument("--out", default=None, help="per-instance csv path")

    o = sub.add_parser("oracle", help="exact optima and greedy per instance")
    subparsers.append(o)
    add_task(o)
    o.add_argument("--data", default=None)
    o.add_argument("--cap", type=int, default=24)
    o.add_argument("--out", default=None, help="jsonl output (default stdout)")

    d = sub.add_parser("distcheck",
                       help="terminal distribution of a checkpoint vs target")
    subparsers.append(d)
    d.add_argument("--ckpt", default=None)
    d.add_argument("--data", default=None)
    d.add_argument("--index", type=int, default=0, help="instance index")
    d.add_argument("--beta", type=float, default=None,
                   help="override the checkpoint's training beta")
    return p, subparsers


def _require(args, *names) -> None:
    for name in names:
        if getattr(args, name, None) is None:
            raise ValueError(f"missing required flag --{name.replace('_', '-')}")


def _fmt(x: float) -> str:
    return repr(float(x))


def cli_gen(args) -> int:
    _require(args, "family", "out")
    n_min, n_max = _parse_range(args.n)
    spec = GenSpec(family=args.family, n_min=n_min, n_max=n_max,
                   count=args.count, seed=args.seed, m=args.m, p=args.p,
                   rb_groups=_parse_range(args.groups),
                   rb_group_size=_parse_range(args.group_size),
                   rb_rounds=args.rounds)
    graphs = gen_dataset(spec)
    save_dataset(args.out, graphs)
    print(f"wrote {len(graphs)} graphs to {args.out} (family={args.family}, "
          f"seed={args.seed})")
    return 0


def cli_train(args) -> int:
    _require(args, "task", "data", "out")
    graphs = load_dataset(args.data)
    if not graphs:
        raise ValueError(f"dataset {args.data} is empty")
    task = Task(args.task)
    cfg = TrainConfig(loss=args.loss, level=args.level, beta=args.beta,
                      anneal_frac=args.anneal_frac, explore_eps=args.eps,
                      batch_size=args.batch, epochs=args.epochs,
                      num_updates=args.updates, lr=args.lr,
                      rollouts_per_update=args.rollouts, seed=args.seed,
                      gin=GinConfig(num_layers=args.layers,
                                    hidden_dim=args.hidden))
    model, rows = train(graphs, task, cfg)
    extra = {"task": task.value, "train_config": cfg.to_dict()}
    save_checkpoint(args.out, model, extra=extra)
    log_path = args.log if args.log else f"{args.out}.log.csv"
    write_training_log(log_path, rows)
    last = rows[-1].mean_objective if rows else float("nan")
    print(f"trained {len(rows)} updates on {len(graphs)} graphs; "
          f"checkpoint {args.out}; log {log_path}; "
          f"recent mean objective {last:.4f}")
    return 0


def write_training_log(path, rows) -> None:
    with open(path, "w") as fh:
        fh.write("update,epoch,loss,beta,mean_objective,wall_ms\n")
        for r in rows:
            fh.write(f"{r.update},{r.epoch},{_fmt(r.loss)},{_fmt(r.beta)},"
                     f"{_fmt(r.mean_objective)},{_fmt(r.wall_ms)}\n")


def cli_eval(args) -> int:
    _require(args, "data", "ckpt")
    graphs = load_dataset(args.data)
    if not graphs:
        raise ValueError(f"dataset {args.data} is empty")
    model, meta = load_checkpoint(args.ckpt)
    task_name = meta["extra"].get("task")
    if task_name is None:
        raise ValueError("checkpoint does not record a task")
    task = Task(task_name)

    rows = []  # (graph_id, method, objective, wall_ms)
    totals = {"gfn": 0.0, "greedy": 0.0, "oracle": 0.0}
    oracle_total_gfn = 0.0
    oracle_count = 0
    t_start = time.perf_counter()
    for idx, g in enumerate(graphs):
        rng = np.random.Generator(np.random.PCG64(
            np.random.SeedSequence((args.seed, idx))))
        t0 = time.perf_counter()
        _, value = sample_best_of_k(g, task, model, args.k, rng)
        dt = (time.perf_counter() - t0) * 1e3
        rows.append((g.graph_id, "gfn", value, dt))
        totals["gfn"] += value

        t0 = time.perf_counter()
        _, gval = orc.greedy(g, task)
        rows.append((g.graph_id, "greedy", gval,
                     (time.perf_counter() - t0) * 1e3))
        totals["greedy"] += gval

        if args.oracle_cap and g.num_vertices <= args.oracle_cap:
            t0 = time.perf_counter()
            res = orc.brute_force_optimum(g, task, cap=args.oracle_cap)
            rows.append((g.graph_id, "oracle", res.optimum,
                         (time.perf_counter() - t0) * 1e3))
            totals["oracle"] += res.optimum
            oracle_total_gfn += value
            oracle_count += 1
    wall = (time.perf_counter() - t_start) * 1e3

    if args.out:
        with open(args.out, "w") as fh:
            fh.write("graph_id,method,objective,wall_ms\n")
            for gid, method, obj, ms in rows:
                fh.write(f"{gid},{method},{_fmt(obj)},{_fmt(ms)}\n")

    n = len(graphs)
    print(f"instances={n} k={args.k} task={task.value}")
    print(f"mean gfn objective    {totals['gfn'] / n:.4f}")
    print(f"mean greedy objective {totals['greedy'] / n:.4f}")
    if oracle_count:
        print(f"mean oracle optimum   {totals['oracle'] / oracle_count:.4f} "
              f"({oracle_count} instances)")
        if task is Task.MDS:
            gap = 1.0 - totals["oracle"] / oracle_total_gfn
            print(f"gap vs oracle         {100.0 * gap:.3f}%")
        else:
            drop = 1.0 - oracle_total_gfn / totals["oracle"]
            print(f"drop vs oracle        {100.0 * drop:.3f}%")
    print(f"total wall ms         {wall:.1f}")
    return 0


def cli_oracle(args) -> int:
    _require(args, "task", "data")
    graphs = load_dataset(args.data)
    task = Task(args.task)
    lines = []
    for g in graphs:
        res = orc.brute_force_optimum(g, task, cap=args.cap)
        _, gval = orc.greedy(g, task)
        lines.append(json.dumps({"id": g.graph_id, "optimum": res.optimum,
                                 "num_optimal": res.num_optimal,
                                 "greedy": gval}))
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cli_distcheck(args) -> int:
    _require(args, "ckpt", "data")
    graphs = load_dataset(args.data)
    if not 0 <= args.index < len(graphs):
        raise ValueError(f"index {args.index} outside dataset of {len(graphs)}")
    g = graphs[args.index]
    model, meta = load_checkpoint(args.ckpt)
    task_name = meta["extra"].get("task")
    if task_name is None:
        raise ValueError("checkpoint does not record a task")
    task = Task(task_name)
    beta = args.beta
    if beta is None:
        beta = meta["extra"].get("train_config", {}).get("beta")
    if beta is None:
        raise ValueError("no beta in checkpoint; pass --beta")

    model_dist = orc.exact_terminal_distribution(g, task, model,
                                                 cap=g.num_vertices)
    target = orc.target_distribution(g, task, float(beta), cap=g.num_vertices)
    tv = orc.tv_distance(model_dist, target)
    print(f"graph {g.graph_id} task {task.value} beta {beta}")
    print("state " + " " * max(0, g.num_vertices - 5) + " model     target")
    for key in sorted(set(model_dist.probs) | set(target.probs)):
        print(f"{key}  {model_dist.probs.get(key, 0.0):.6f}  "
              f"{target.probs.get(key, 0.0):.6f}")
    print(f"tv distance {tv:.6f}")
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        defaults = _load_config_defaults(argv)
        parser, subparsers = _build_parser()
        if defaults:
            parser.set_defaults(**defaults)
            for sp in subparsers:
                sp.set_defaults(**defaults)
        args = parser.parse_args(argv)
        handler = {"gen": cli_gen, "train": cli_train, "eval": cli_eval,
                   "oracle": cli_oracle, "distcheck": cli_distcheck}[args.command]
        return handler(args)
    except (ValueError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
