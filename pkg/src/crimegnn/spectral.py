"""Spectral clustering on the symmetric normalized Laplacian.

Eigenvectors come from block power iteration on ``2I - L_sym`` with
Rayleigh-Ritz extraction, so no sparse factorization is needed.
"""

from __future__ import annotations

import numpy as np

from .graph import Graph, GraphError, Partition, canonicalize
from .objectives import modularity


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


def _inv_sqrt_degrees(g: Graph) -> np.ndarray:
    d = g.degrees
    out = np.zeros_like(d)
    nz = d > 0
    out[nz] = 1.0 / np.sqrt(d[nz])
    return out


def laplacian_apply(g: Graph, x: np.ndarray) -> np.ndarray:
    """``L_sym @ x`` with ``L_sym = I - D^-1/2 A D^-1/2``; isolated nodes get ``D^-1/2 = 0``."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != g.n:
        raise GraphError(f"operand has {x.shape[0]} rows, graph has {g.n} nodes")
    s = _inv_sqrt_degrees(g)
    if x.ndim == 1:
        return x - s * (g.matrix @ (s * x))
    return x - s[:, None] * (g.matrix @ (s[:, None] * x))


def bottom_k_eigenvectors(
    g: Graph, k: int, tol: float = 1e-8, max_iter: int = 5000, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """Smallest ``k`` eigenpairs of ``L_sym``, eigenvalues ascending.

    The iterated block carries a few extra vectors beyond ``k`` to speed up
    convergence of the wanted ones.
    """
    n = g.n
    if not 1 <= k <= n:
        raise GraphError(f"need 1 <= k <= n, got k={k}, n={n}")
    block = min(n, k + max(2, k))
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, block)))
    worst = np.inf
    for _ in range(max_iter):
        lq = laplacian_apply(g, q)
        # Rayleigh-Ritz on the current subspace
        h = q.T @ lq
        evals, evecs = np.linalg.eigh((h + h.T) / 2.0)
        vecs = q @ evecs
        lvecs = lq @ evecs
        res = np.linalg.norm(lvecs[:, :k] - vecs[:, :k] * evals[:k], axis=0)
        worst = float(np.max(res / np.maximum(1.0, np.abs(evals[:k]))))
        if worst <= tol:
            return vecs[:, :k], evals[:k]
        # power step on 2I - L_sym, ordered so the wanted directions lead
        q, _ = np.linalg.qr(2.0 * vecs - lvecs)
    raise ConvergenceError(f"eigensolver did not converge in {max_iter} iterations (worst residual {worst:.3g})", worst)


def row_normalize(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)


def _sq_dists(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    return ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def kmeans_objective(points: np.ndarray, labels: np.ndarray, centers: np.ndarray) -> float:
    return float(((points - centers[labels]) ** 2).sum())


def kmeans(
    points: np.ndarray, k: int, seed: int = 0, max_iter: int = 100, trace: list | None = None
) -> np.ndarray:
    """Lloyd's algorithm with k-means++ seeding.

    Ties in nearest-centroid go to the lowest index. An empty cluster takes
    the point farthest from its current centroid. If ``trace`` is given the
    objective after every centroid update is appended to it.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim == 1:
        points = points[:, None]
    n = len(points)
    if not 1 <= k <= n:
        raise GraphError(f"need 1 <= k <= n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)

    centers = [points[rng.integers(n)]]
    for _ in range(1, k):
        d2 = _sq_dists(points, np.array(centers)).min(axis=1)
        total = d2.sum()
        if total > 0:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        else:
            idx = int(rng.integers(n))
        centers.append(points[idx])
    centers = np.array(centers)

    labels = None
    for _ in range(max_iter):
        d2 = _sq_dists(points, centers)
        new = np.argmin(d2, axis=1)
        counts = np.bincount(new, minlength=k)
        for c in np.flatnonzero(counts == 0):
            own = d2[np.arange(n), new]
            # only steal from clusters that can spare a point
            own = np.where(np.bincount(new, minlength=k)[new] > 1, own, -1.0)
            far = int(np.argmax(own))
            new[far] = c
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        centers = np.array([points[labels == c].mean(axis=0) for c in range(k)])
        if trace is not None:
            trace.append(kmeans_objective(points, labels, centers))
    return labels


def spectral_clustering(g: Graph, k: int, seed: int = 0) -> tuple[Partition, float]:
    if g.total_weight <= 0:
        raise GraphError("graph has no edges (m == 0)")
    if k > g.n:
        raise GraphError(f"k={k} exceeds node count {g.n}")
    vecs, _ = bottom_k_eigenvectors(g, k, seed=seed)
    emb = row_normalize(vecs)
    labels = kmeans(emb, k, seed=seed)
    labels[np.linalg.norm(emb, axis=1) == 0] = 0
    part = canonicalize(labels)
    return part, modularity(g, part)
