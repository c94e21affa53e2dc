"""Partition quality: modularity (hard and soft), coverage, pairwise F1."""

from __future__ import annotations

import numpy as np

from .graph import Graph, GraphError, Partition, check_partition, membership_matrix


def _require_edges(g: Graph) -> None:
    if g.total_weight <= 0:
        raise GraphError("graph has no edges (m == 0)")


def community_totals(g: Graph, p: Partition) -> tuple[np.ndarray, np.ndarray]:
    """Per-community internal directed weight and degree sum.

    Internal weight counts each internal edge once per direction, so it is
    ``sum_{j,k in c} A_jk``.
    """
    check_partition(g, p)
    member = membership_matrix(p)
    w_in = (member.T @ g.matrix @ member).diagonal()
    d_tot = np.bincount(p.labels, weights=g.degrees, minlength=p.k)
    return np.asarray(w_in, dtype=np.float64), d_tot


def modularity(g: Graph, p: Partition) -> float:
    _require_edges(g)
    w_in, d_tot = community_totals(g, p)
    two_m = 2.0 * g.total_weight
    return float(np.sum(w_in / two_m - (d_tot / two_m) ** 2))


def apply_modularity_operator(g: Graph, x: np.ndarray) -> np.ndarray:
    """Return ``B @ x`` for ``B = A - d d^T / 2m`` without forming ``B``."""
    _require_edges(g)
    x = np.asarray(x, dtype=np.float64)
    vec = x.ndim == 1
    if vec:
        x = x[:, None]
    if x.shape[0] != g.n:
        raise GraphError(f"operand has {x.shape[0]} rows, graph has {g.n} nodes")
    d = g.degrees
    out = g.matrix @ x - np.outer(d, d @ x) / (2.0 * g.total_weight)
    return out[:, 0] if vec else out


def check_soft_assignment(s: np.ndarray, n: int, tol: float = 1e-6) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != n:
        raise GraphError(f"soft assignment must be {n} x k, got shape {s.shape}")
    dev = np.abs(s.sum(axis=1) - 1.0)
    if dev.size and dev.max() > tol:
        raise GraphError(f"soft assignment rows must sum to 1 (max deviation {dev.max():.3g})")
    return s


def soft_modularity(g: Graph, s: np.ndarray) -> float:
    """Relaxed modularity ``tr(S^T B S) / 2m``; equals :func:`modularity` on one-hot ``S``."""
    s = check_soft_assignment(s, g.n)
    bs = apply_modularity_operator(g, s)
    return float(np.sum(s * bs) / (2.0 * g.total_weight))


def coverage(g: Graph, p: Partition) -> float:
    """Fraction of edge weight that falls inside communities."""
    _require_edges(g)
    w_in, _ = community_totals(g, p)
    return float(w_in.sum() / (2.0 * g.total_weight))


def _pairs(counts: np.ndarray) -> float:
    counts = counts.astype(np.float64)
    return float(np.sum(counts * (counts - 1.0) / 2.0))


def pairwise_f1(pred: Partition, truth: Partition) -> float:
    """F1 over unordered node pairs placed in the same community.

    Returns 1 when neither partition co-clusters any pair, 0 when only the
    truth does.
    """
    if pred.n != truth.n:
        raise GraphError(f"length mismatch: {pred.n} vs {truth.n}")
    if pred.n < 2:
        raise GraphError("pairwise F1 needs at least two nodes")
    joint = np.bincount(pred.labels * truth.k + truth.labels, minlength=pred.k * truth.k)
    tp = _pairs(joint)
    pred_pairs = _pairs(np.bincount(pred.labels, minlength=pred.k))
    true_pairs = _pairs(np.bincount(truth.labels, minlength=truth.k))
    if pred_pairs == 0 and true_pairs == 0:
        return 1.0
    if tp == 0:
        return 0.0
    precision = tp / pred_pairs
    recall = tp / true_pairs
    return 2.0 * precision * recall / (precision + recall)
