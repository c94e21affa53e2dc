"""Modularity-trained GNN: features, full-batch training, hardening, persistence."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .autodiff import (
    AdamState,
    ModelParams,
    adam_step,
    collapse_penalty,
    gcn_forward,
    loss_and_grad,
    normalize_adjacency,
)
from .graph import Graph, GraphError, Partition, canonicalize

__all__ = [
    "TrainConfig",
    "TrainHistory",
    "collapse_penalty",
    "default_features",
    "harden",
    "train",
    "predict_partition",
    "save_model",
    "load_model",
]

MODEL_FORMAT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    k: int
    hidden: int = 64
    feature_dim: int = 16
    epochs: int = 50
    lr: float = 1e-3
    lam: float = 1.0
    seed: int = 0
    depth: int = 2

    def __post_init__(self):
        if self.k < 1:
            raise GraphError("k must be at least 1")
        if self.epochs < 1:
            raise GraphError("epochs must be at least 1")
        if not self.lr > 0:
            raise GraphError("learning rate must be positive")
        if self.lam < 0:
            raise GraphError("collapse weight must be non-negative")
        if self.feature_dim < 2:
            raise GraphError("feature_dim must be at least 2")
        if self.depth < 1 or self.hidden < 1:
            raise GraphError("depth and hidden size must be positive")


@dataclass
class TrainHistory:
    loss: list[float] = field(default_factory=list)
    soft_modularity: list[float] = field(default_factory=list)
    penalty: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.loss)


def _seeds(seed: int) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    features, params = np.random.SeedSequence(seed).spawn(2)
    return features, params


def default_features(g: Graph, f: int, seed: int) -> np.ndarray:
    """Normalized degree in column 0, scaled standard-normal noise elsewhere."""
    if f < 2:
        raise GraphError("need at least two feature columns")
    x = np.empty((g.n, f))
    dmax = g.degrees.max() if g.n else 0.0
    x[:, 0] = g.degrees / dmax if dmax > 0 else 0.0
    rng = np.random.default_rng(_seeds(seed)[0])
    x[:, 1:] = rng.standard_normal((g.n, f - 1)) / math.sqrt(f - 1)
    return x


def init_params(cfg: TrainConfig) -> ModelParams:
    return ModelParams.glorot(cfg.feature_dim, cfg.hidden, cfg.k, cfg.depth, seed=_seeds(cfg.seed)[1])


def train(g: Graph, cfg: TrainConfig) -> tuple[ModelParams, TrainHistory]:
    """One full-graph Adam step per epoch on ``-Q_soft + lam * penalty``.

    History entry ``i`` is measured at the parameters before step ``i``.
    """
    if g.total_weight <= 0:
        raise GraphError("graph has no edges (m == 0)")
    if cfg.k > g.n:
        raise GraphError(f"k={cfg.k} exceeds node count {g.n}")
    a_hat = normalize_adjacency(g)
    x0 = default_features(g, cfg.feature_dim, cfg.seed)
    params = init_params(cfg)
    state = AdamState.zeros_like(params)
    hist = TrainHistory()
    for _ in range(cfg.epochs):
        res = loss_and_grad(g, x0, params, cfg.lam, a_hat=a_hat)
        hist.loss.append(res.loss)
        hist.soft_modularity.append(res.soft_modularity)
        hist.penalty.append(res.penalty)
        params, state = adam_step(params, res.grads, state, lr=cfg.lr)
    return params, hist


def harden(s: np.ndarray) -> Partition:
    """Row-wise argmax; ties go to the lowest column."""
    return canonicalize(np.argmax(np.asarray(s), axis=1))


def predict_partition(g: Graph, params: ModelParams, cfg: TrainConfig) -> tuple[Partition, np.ndarray]:
    if params.feature_dim != cfg.feature_dim or params.k != cfg.k or len(params.weights) != cfg.depth:
        raise GraphError("parameters do not match the configuration")
    x0 = default_features(g, cfg.feature_dim, cfg.seed)
    s, _ = gcn_forward(normalize_adjacency(g), x0, params)
    return harden(s), s


def _encode(t: np.ndarray) -> dict:
    return {"shape": list(t.shape), "data": [float(x).hex() for x in t.ravel()]}


def _decode(obj: dict) -> np.ndarray:
    data = np.array([float.fromhex(x) for x in obj["data"]], dtype=np.float64)
    return data.reshape(obj["shape"])


def save_model(params: ModelParams, cfg: TrainConfig) -> str:
    """JSON document with the config and every tensor as hex floats."""
    doc = {
        "format": "crimegnn-model",
        "version": MODEL_FORMAT_VERSION,
        "config": asdict(cfg),
        "tensors": [_encode(t) for t in params.tensors()],
    }
    return json.dumps(doc, indent=1)


def load_model(text: str) -> tuple[ModelParams, TrainConfig]:
    doc = json.loads(text)
    if doc.get("format") != "crimegnn-model" or doc.get("version") != MODEL_FORMAT_VERSION:
        raise GraphError("not a crimegnn model file of a supported version")
    cfg = TrainConfig(**doc["config"])
    params = ModelParams.from_tensors([_decode(t) for t in doc["tensors"]])
    return params, cfg
