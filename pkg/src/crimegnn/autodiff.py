"""Graph-convolutional encoder with hand-derived reverse-mode gradients.

The computation is fixed: ``depth`` propagation layers
``H <- selu(A_hat @ H @ W + b)`` followed by a softmax assignment head. The
backward pass walks the cached activations in reverse; correctness is
enforced by :func:`finite_diff_check`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .graph import Graph, GraphError
from .objectives import apply_modularity_operator

SELU_ALPHA = 1.6732632423543772848170429916717
SELU_SCALE = 1.0507009873554804934193349852946
LOGIT_CLAMP = 40.0


def normalize_adjacency(g: Graph) -> sp.csr_matrix:
    """Symmetric normalization ``D~^-1/2 (A + I) D~^-1/2``."""
    a_tilde = (g.matrix + sp.identity(g.n, format="csr")).tocsr()
    d = np.asarray(a_tilde.sum(axis=1)).ravel()
    inv_sqrt = sp.diags(1.0 / np.sqrt(d))
    return (inv_sqrt @ a_tilde @ inv_sqrt).tocsr()


def selu(x: np.ndarray) -> np.ndarray:
    return SELU_SCALE * np.where(x > 0, x, SELU_ALPHA * np.expm1(np.minimum(x, 0.0)))


def selu_grad(x: np.ndarray) -> np.ndarray:
    return SELU_SCALE * np.where(x > 0, 1.0, SELU_ALPHA * np.exp(np.minimum(x, 0.0)))


def softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


@dataclass
class ModelParams:
    """Encoder weights ``W1: f x h``, ``W2..: h x h``, biases, and head ``W_out: h x k``."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    w_out: np.ndarray

    @property
    def shape_signature(self) -> tuple:
        return tuple(t.shape for t in self.tensors())

    @property
    def feature_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def k(self) -> int:
        return self.w_out.shape[1]

    def tensors(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        out.append(self.w_out)
        return out

    @classmethod
    def from_tensors(cls, tensors: list[np.ndarray]) -> "ModelParams":
        *layers, w_out = tensors
        return cls(weights=list(layers[0::2]), biases=list(layers[1::2]), w_out=w_out)

    def copy(self) -> "ModelParams":
        return ModelParams.from_tensors([t.copy() for t in self.tensors()])

    @classmethod
    def zeros(cls, f: int, h: int, k: int, depth: int = 2) -> "ModelParams":
        dims = [f] + [h] * depth
        return cls(
            weights=[np.zeros((dims[i], dims[i + 1])) for i in range(depth)],
            biases=[np.zeros(h) for _ in range(depth)],
            w_out=np.zeros((h, k)),
        )

    @classmethod
    def glorot(cls, f: int, h: int, k: int, depth: int = 2, seed: int = 0) -> "ModelParams":
        """Glorot-uniform weights and zero biases, drawn in layer order."""
        rng = np.random.default_rng(seed)

        def draw(fan_in, fan_out):
            limit = math.sqrt(6.0 / (fan_in + fan_out))
            return rng.uniform(-limit, limit, size=(fan_in, fan_out))

        dims = [f] + [h] * depth
        return cls(
            weights=[draw(dims[i], dims[i + 1]) for i in range(depth)],
            biases=[np.zeros(h) for _ in range(depth)],
            w_out=draw(h, k),
        )


@dataclass
class Tape:
    a_hat: sp.csr_matrix
    propagated: list[np.ndarray] = field(default_factory=list)  # A_hat @ H_{l-1}
    pre: list[np.ndarray] = field(default_factory=list)  # Z_l
    hidden: list[np.ndarray] = field(default_factory=list)  # H_l
    logits: np.ndarray | None = None  # before clamping
    s: np.ndarray | None = None


def gcn_forward(a_hat: sp.csr_matrix, x0: np.ndarray, params: ModelParams) -> tuple[np.ndarray, Tape]:
    if x0.shape != (a_hat.shape[0], params.feature_dim):
        raise GraphError(f"features have shape {x0.shape}, expected ({a_hat.shape[0]}, {params.feature_dim})")
    tape = Tape(a_hat=a_hat)
    h = x0
    for w, b in zip(params.weights, params.biases):
        if h.shape[1] != w.shape[0] or b.shape != (w.shape[1],):
            raise GraphError("parameter shapes are inconsistent")
        prop = a_hat @ h
        z = prop @ w + b
        h = selu(z)
        tape.propagated.append(prop)
        tape.pre.append(z)
        tape.hidden.append(h)
    if h.shape[1] != params.w_out.shape[0]:
        raise GraphError("assignment head does not match hidden size")
    logits = h @ params.w_out
    s = softmax_rows(np.clip(logits, -LOGIT_CLAMP, LOGIT_CLAMP))
    tape.logits = logits
    tape.s = s
    return s, tape


def gcn_backward(tape: Tape, params: ModelParams, grad_s: np.ndarray) -> ModelParams:
    """Pull ``dL/dS`` back to every parameter tensor."""
    s = tape.s
    g_logits = s * (grad_s - np.sum(grad_s * s, axis=1, keepdims=True))
    g_logits = g_logits * (np.abs(tape.logits) <= LOGIT_CLAMP)
    h_last = tape.hidden[-1]
    g_wout = h_last.T @ g_logits
    g_h = g_logits @ params.w_out.T
    g_ws, g_bs = [], []
    for layer in reversed(range(len(params.weights))):
        g_z = g_h * selu_grad(tape.pre[layer])
        g_bs.append(g_z.sum(axis=0))
        g_ws.append(tape.propagated[layer].T @ g_z)
        if layer > 0:
            # A_hat is symmetric
            g_h = tape.a_hat @ (g_z @ params.weights[layer].T)
    return ModelParams(weights=g_ws[::-1], biases=g_bs[::-1], w_out=g_wout)


def collapse_penalty(s: np.ndarray) -> float:
    """``sqrt(k)/n * ||column sums of S|| - 1``: zero for balanced sizes."""
    n, k = s.shape
    return float(math.sqrt(k) / n * np.linalg.norm(s.sum(axis=0)) - 1.0)


def collapse_penalty_grad(s: np.ndarray) -> np.ndarray:
    n, k = s.shape
    c = s.sum(axis=0)
    norm = np.linalg.norm(c)
    row = math.sqrt(k) / n * c / norm
    return np.broadcast_to(row, s.shape).copy()


def _objective_terms(g: Graph, s: np.ndarray) -> tuple[float, np.ndarray, float]:
    bs = apply_modularity_operator(g, s)
    q = float(np.sum(s * bs) / (2.0 * g.total_weight))
    return q, bs, collapse_penalty(s)


def loss_value(g: Graph, a_hat, x0: np.ndarray, params: ModelParams, lam: float) -> float:
    s, _ = gcn_forward(a_hat, x0, params)
    q, _, pen = _objective_terms(g, s)
    return -q + lam * pen


@dataclass
class LossResult:
    loss: float
    soft_modularity: float
    penalty: float
    grads: ModelParams
    s: np.ndarray


def loss_and_grad(
    g: Graph, x0: np.ndarray, params: ModelParams, lam: float, a_hat: sp.csr_matrix | None = None
) -> LossResult:
    """Loss ``-soft_modularity(S) + lam * collapse_penalty(S)`` and its exact gradient."""
    if g.total_weight <= 0:
        raise GraphError("graph has no edges (m == 0)")
    if a_hat is None:
        a_hat = normalize_adjacency(g)
    s, tape = gcn_forward(a_hat, x0, params)
    q, bs, pen = _objective_terms(g, s)
    grad_s = -bs / g.total_weight
    if lam:
        grad_s = grad_s + lam * collapse_penalty_grad(s)
    grads = gcn_backward(tape, params, grad_s)
    return LossResult(loss=-q + lam * pen, soft_modularity=q, penalty=pen, grads=grads, s=s)


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, params: ModelParams) -> "AdamState":
        ts = params.tensors()
        return cls(m=[np.zeros_like(x) for x in ts], v=[np.zeros_like(x) for x in ts], t=0)


def adam_step(
    params: ModelParams,
    grads: ModelParams,
    state: AdamState,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update; returns new params and state."""
    ps, gs = params.tensors(), grads.tensors()
    if [p.shape for p in ps] != [x.shape for x in gs] or len(ps) != len(state.m):
        raise GraphError("parameter, gradient and state shapes disagree")
    t = state.t + 1
    new_p, new_m, new_v = [], [], []
    for p, g_, m, v in zip(ps, gs, state.m, state.v):
        m = beta1 * m + (1.0 - beta1) * g_
        v = beta2 * v + (1.0 - beta2) * g_ * g_
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        new_p.append(p - lr * m_hat / (np.sqrt(v_hat) + eps))
        new_m.append(m)
        new_v.append(v)
    return ModelParams.from_tensors(new_p), AdamState(m=new_m, v=new_v, t=t)


def numeric_gradient(g: Graph, x0: np.ndarray, params: ModelParams, lam: float, step: float) -> ModelParams:
    """Central finite differences of the loss for every parameter entry."""
    a_hat = normalize_adjacency(g)
    work = params.copy()
    out = []
    for t in work.tensors():
        grad = np.zeros_like(t)
        flat, gflat = t.reshape(-1), grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = loss_value(g, a_hat, x0, work, lam)
            flat[i] = orig - step
            down = loss_value(g, a_hat, x0, work, lam)
            flat[i] = orig
            gflat[i] = (up - down) / (2.0 * step)
        out.append(grad)
    return ModelParams.from_tensors(out)


def finite_diff_check(g: Graph, x0: np.ndarray, params: ModelParams, lam: float, step: float = 1e-5) -> float:
    """Max over entries of ``|analytic - numeric| / max(1e-12, |analytic| + |numeric|)``."""
    if step <= 0:
        raise GraphError("finite-difference step must be positive")
    analytic = loss_and_grad(g, x0, params, lam).grads.tensors()
    numeric = numeric_gradient(g, x0, params, lam, step).tensors()
    worst = 0.0
    for a, n in zip(analytic, numeric):
        rel = np.abs(a - n) / np.maximum(1e-12, np.abs(a) + np.abs(n))
        if rel.size:
            worst = max(worst, float(rel.max()))
    return worst
