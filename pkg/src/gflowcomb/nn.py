"""Graph isomorphism networks for policy logits and state flows.

Two structurally identical GINs: one maps a labeled graph state to
per-vertex action logits, the other to a single scalar read as a log
flow.  Layer update: h' = MLP((1 + eps) * h + sum of neighbor h), with
MLP = linear -> relu -> linear and no residual connections.  Inputs are
the vertex labels {0, 1, 2} looked up in a learned embedding table.

Hidden weights use uniform fan-in (Kaiming style) init; output heads
start at zero so a fresh model is exactly uniform over legal actions
with zero log flow everywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .autodiff import Tensor, embedding, masked_log_softmax  # noqa: F401
from .graphs import Graph

NUM_LABELS = 3


@dataclass(frozen=True)
class GinConfig:
    num_layers: int = 5
    hidden_dim: int = 256

    def __post_init__(self):
        if self.num_layers < 1 or self.hidden_dim < 1:
            raise ValueError("num_layers and hidden_dim must be >= 1")


def _kaiming_uniform(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


class _GinLayer:
    def __init__(self, hidden_dim: int, rng: np.random.Generator):
        h = hidden_dim
        self.eps = Tensor(0.0, requires_grad=True)
        self.w1 = Tensor(_kaiming_uniform(rng, h, (h, h)), requires_grad=True)
        self.b1 = Tensor(np.zeros(h), requires_grad=True)
        self.w2 = Tensor(_kaiming_uniform(rng, h, (h, h)), requires_grad=True)
        self.b2 = Tensor(np.zeros(h), requires_grad=True)

    def forward(self, adj: Tensor, h: Tensor) -> Tensor:
        x = h * (1.0 + self.eps) + adj @ h
        return (x @ self.w1 + self.b1).relu() @ self.w2 + self.b2

    def params(self) -> list[tuple[str, Tensor]]:
        return [("eps", self.eps), ("w1", self.w1), ("b1", self.b1),
                ("w2", self.w2), ("b2", self.b2)]


class _GinNetwork:
    """Embedding -> GIN stack -> linear head (per node or pooled)."""

    def __init__(self, cfg: GinConfig, rng: np.random.Generator,
                 graph_level: bool):
        h = cfg.hidden_dim
        self.graph_level = graph_level
        self.embedding = Tensor(rng.normal(0.0, 1.0 / np.sqrt(h), (NUM_LABELS, h)),
                                requires_grad=True)
        self.layers = [_GinLayer(h, rng) for _ in range(cfg.num_layers)]
        self.head_w = Tensor(np.zeros((h, 1)), requires_grad=True)
        self.head_b = Tensor(np.zeros(1), requires_grad=True)

    def forward(self, g: Graph, labels: np.ndarray) -> Tensor:
        """labels: int array (B, n).  Returns (B, n) logits or (B,) scalars."""
        labels = np.asarray(labels)
        if labels.ndim != 2:
            raise ValueError("labels must be a (B, n) batch")
        bsz, n = labels.shape
        adj = Tensor(g.dense_adjacency())
        h = embedding(self.embedding, labels)
        for layer in self.layers:
            h = layer.forward(adj, h)
        if self.graph_level:
            pooled = h.sum(axis=1)
            return (pooled @ self.head_w).reshape(bsz) + self.head_b
        return (h @ self.head_w).reshape(bsz, n) + self.head_b

    def params(self) -> list[tuple[str, Tensor]]:
        out = [("embedding", self.embedding)]
        for i, layer in enumerate(self.layers):
            out.extend((f"layers.{i}.{k}", t) for k, t in layer.params())
        out.extend([("head.w", self.head_w), ("head.b", self.head_b)])
        return out


class PolicyModel:
    """Separate policy and flow GINs over the same label vocabulary."""

    def __init__(self, config: GinConfig, rng: np.random.Generator):
        self.config = config
        self.policy_net = _GinNetwork(config, rng, graph_level=False)
        self.flow_net = _GinNetwork(config, rng, graph_level=True)

    def forward_policy(self, g: Graph, labels: np.ndarray) -> Tensor:
        return self.policy_net.forward(g, labels)

    def forward_flow(self, g: Graph, labels: np.ndarray) -> Tensor:
        return self.flow_net.forward(g, labels)

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        out = [(f"policy.{k}", t) for k, t in self.policy_net.params()]
        out.extend((f"flow.{k}", t) for k, t in self.flow_net.params())
        return out

    def parameters(self) -> list[Tensor]:
        return [t for _, t in self.named_parameters()]


def gin_forward(model: PolicyModel, g: Graph, s) -> tuple[Tensor, Tensor]:
    """Single-state forward: (per-vertex logits (n,), log flow scalar)."""
    labels = s.labels if hasattr(s, "labels") else np.asarray(s)
    batch = labels.reshape(1, -1)
    logits = model.forward_policy(g, batch).reshape(labels.shape[0])
    flow = model.forward_flow(g, batch).reshape(())
    return logits, flow


# -- checkpoints -------------------------------------------------------

CHECKPOINT_VERSION = 1


def save_checkpoint(path, model: PolicyModel, extra: dict | None = None,
                    optimizer=None) -> None:
    """Write model (and optionally optimizer) state as a single json file."""
    params = {}
    for name, t in model.named_parameters():
        params[name] = {"shape": list(t.data.shape),
                        "values": t.data.ravel().tolist()}
    doc = {
        "format_version": CHECKPOINT_VERSION,
        "config": {"num_layers": model.config.num_layers,
                   "hidden_dim": model.config.hidden_dim},
        "extra": extra or {},
        "params": params,
        "optimizer": optimizer.state_dict() if optimizer is not None else None,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path) -> tuple[PolicyModel, dict]:
    """Rebuild a model from a checkpoint file.

    Returns (model, meta) where meta holds the extra dict and, if
    present, the raw optimizer state under "optimizer".
    """
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('format_version')!r}")
    cfg = GinConfig(num_layers=int(doc["config"]["num_layers"]),
                    hidden_dim=int(doc["config"]["hidden_dim"]))
    model = PolicyModel(cfg, np.random.default_rng(0))
    for name, t in model.named_parameters():
        entry = doc["params"][name]
        arr = np.asarray(entry["values"], dtype=np.float64).reshape(entry["shape"])
        t.data = arr
    meta = {"extra": doc.get("extra", {}), "optimizer": doc.get("optimizer")}
    return model, meta
