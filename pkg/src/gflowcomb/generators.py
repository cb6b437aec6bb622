"""Random graph generators and dataset assembly.

All generators take an explicit numpy Generator so instances are fully
reproducible.  gen_dataset derives one child seed per instance, so the
i-th graph of a dataset does not depend on how many graphs are drawn
before it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graphs import Graph


@dataclass
class GenSpec:
    """Dataset recipe.

    family: "ba", "er" or "rb".
    n_min/n_max: inclusive vertex-count range (ba/er).
    count: number of instances.
    seed: master seed; instance i uses child seed (seed, i).
    m: attachment edges per new vertex (ba).
    p: edge probability (er).
    rb_groups / rb_group_size: inclusive ranges for the clique-cluster
        family; rb_rounds inter-group edge insertion attempts (default
        groups * group_size when None).
    """

    family: str
    n_min: int = 0
    n_max: int = 0
    count: int = 1
    seed: int = 0
    m: int = 4
    p: float = 0.5
    rb_groups: tuple[int, int] = (3, 5)
    rb_group_size: tuple[int, int] = (3, 6)
    rb_rounds: int | None = None

    def __post_init__(self):
        if self.family not in ("ba", "er", "rb"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if self.family in ("ba", "er"):
            if self.n_min < 1 or self.n_max < self.n_min:
                raise ValueError("need 1 <= n_min <= n_max")
        if self.family == "ba" and self.m < 1:
            raise ValueError("m must be >= 1")
        if self.family == "er" and not 0.0 <= self.p <= 1.0:
            raise ValueError("p must be in [0, 1]")


def gen_ba(n: int, m: int, rng: np.random.Generator) -> Graph:
    """Preferential-attachment graph with exactly (n - m) * m edges.

    Starts from m isolated vertices.  Each new vertex attaches m edges
    to existing vertices drawn proportionally to current degree, with
    repeat draws rejected; the first new vertex connects to all seeds.
    """
    if n <= m:
        raise ValueError(f"need n > m, got n={n}, m={m}")
    edges = []
    # each vertex appears once per unit of degree
    repeated: list[int] = []
    for v in range(m, n):
        if not repeated:
            targets = list(range(m))
        else:
            targets = []
            seen = set()
            while len(targets) < m:
                t = repeated[rng.integers(len(repeated))]
                if t in seen:
                    continue
                seen.add(t)
                targets.append(t)
        for t in targets:
            edges.append((t, v))
            repeated.append(t)
            repeated.append(v)
    return Graph(n, edges)


def gen_er(n: int, p: float, rng: np.random.Generator) -> Graph:
    """G(n, p): every unordered pair independently with probability p."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.shape[0]) < p
    edges = np.stack([iu[keep], ju[keep]], axis=1)
    return Graph(n, edges)


def gen_rb(groups: int, group_size: int, rounds: int,
           rng: np.random.Generator) -> Graph:
    """Clique-cluster graphs: disjoint cliques plus random inter-group edges.

    Each round picks two distinct groups and inserts one missing edge
    between them (skipped if that pair is already saturated).  Any
    independent set therefore has at most one vertex per clique.
    """
    if groups < 2 or group_size < 1:
        raise ValueError("need groups >= 2 and group_size >= 1")
    n = groups * group_size
    members = [list(range(g * group_size, (g + 1) * group_size))
               for g in range(groups)]
    present = set()
    edges = []
    for mem in members:
        for i in range(group_size):
            for j in range(i + 1, group_size):
                e = (mem[i], mem[j])
                edges.append(e)
                present.add(e)
    for _ in range(rounds):
        ga, gb = rng.choice(groups, size=2, replace=False)
        missing = [(min(u, v), max(u, v))
                   for u in members[ga] for v in members[gb]
                   if (min(u, v), max(u, v)) not in present]
        if not missing:
            continue
        e = missing[rng.integers(len(missing))]
        edges.append(e)
        present.add(e)
    return Graph(n, edges)


def _instance_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, index))))


def gen_dataset(spec: GenSpec) -> list[Graph]:
    """Draw spec.count graphs; vertex counts uniform over [n_min, n_max]."""
    out = []
    for i in range(spec.count):
        rng = _instance_rng(spec.seed, i)
        if spec.family == "ba":
            n = int(rng.integers(spec.n_min, spec.n_max + 1))
            if n <= spec.m:
                raise ValueError(f"ba needs n_min > m, got n={n}, m={spec.m}")
            g = gen_ba(n, spec.m, rng)
        elif spec.family == "er":
            n = int(rng.integers(spec.n_min, spec.n_max + 1))
            g = gen_er(n, spec.p, rng)
        else:
            groups = int(rng.integers(spec.rb_groups[0], spec.rb_groups[1] + 1))
            size = int(rng.integers(spec.rb_group_size[0], spec.rb_group_size[1] + 1))
            rounds = spec.rb_rounds if spec.rb_rounds is not None else groups * size
            g = gen_rb(groups, size, rounds, rng)
        g.graph_id = f"{spec.family}-{spec.seed}-{i:04d}"
        out.append(g)
    return out
