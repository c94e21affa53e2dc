"""Immutable weighted undirected graphs and hard partitions.

Adjacency is held in CSR form with every undirected edge stored in both
directions. A self-loop of weight ``w`` is stored once with weight ``2w``, so
row sums are degrees and the stored total is exactly ``2m``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp


class GraphError(ValueError):
    """Invalid graph or partition input."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Graph:
    n: int
    indptr: np.ndarray
    indices: np.ndarray
    weights: np.ndarray
    degrees: np.ndarray = field(repr=False)
    total_weight: float = 0.0

    @classmethod
    def from_csr(cls, mat: sp.csr_matrix) -> "Graph":
        mat = sp.csr_matrix(mat, dtype=np.float64)
        mat.sum_duplicates()
        mat.eliminate_zeros()
        mat.sort_indices()
        n = mat.shape[0]
        degrees = np.asarray(mat.sum(axis=1)).ravel()
        return cls(
            n=n,
            indptr=_frozen(mat.indptr.astype(np.int64)),
            indices=_frozen(mat.indices.astype(np.int64)),
            weights=_frozen(mat.data.copy()),
            degrees=_frozen(degrees),
            total_weight=float(mat.data.sum()) / 2.0,
        )

    @cached_property
    def matrix(self) -> sp.csr_matrix:
        """Adjacency as a scipy CSR matrix (diagonal holds twice the loop weight)."""
        return sp.csr_matrix((self.weights, self.indices, self.indptr), shape=(self.n, self.n))

    @cached_property
    def self_loops(self) -> np.ndarray:
        """Stored diagonal entries, i.e. ``2w`` for a loop of weight ``w``."""
        return _frozen(self.matrix.diagonal().copy())

    def neighbors(self, v: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.indptr[v], self.indptr[v + 1]
        return self.indices[lo:hi], self.weights[lo:hi]

    def edges(self) -> list[tuple[int, int, float]]:
        """Undirected edges ``(u, v, w)`` with ``u <= v`` in row order."""
        out = []
        for u in range(self.n):
            nbrs, ws = self.neighbors(u)
            for v, w in zip(nbrs.tolist(), ws.tolist()):
                if v > u:
                    out.append((u, v, w))
                elif v == u:
                    out.append((u, u, w / 2.0))
        return out

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()


def build_graph(n: int, edges: Iterable[Sequence]) -> Graph:
    """Build a graph from ``(u, v)`` or ``(u, v, weight)`` tuples.

    Duplicates, including reversed pairs, are merged by summing weights.
    """
    if n <= 0:
        raise GraphError("graph must have at least one node")
    rows, cols, vals = [], [], []
    for e in edges:
        if len(e) == 2:
            u, v = e
            w = 1.0
        elif len(e) == 3:
            u, v, w = e
            w = float(w)
        else:
            raise GraphError(f"edge must have 2 or 3 fields, got {e!r}")
        u, v = int(u), int(v)
        if not (0 <= u < n and 0 <= v < n):
            raise GraphError(f"edge ({u}, {v}) out of range for n={n}")
        if not w > 0 or not np.isfinite(w):
            raise GraphError(f"edge ({u}, {v}) has non-positive weight {w}")
        if u == v:
            rows.append(u)
            cols.append(u)
            vals.append(2.0 * w)
        else:
            rows += [u, v]
            cols += [v, u]
            vals += [w, w]
    mat = sp.coo_matrix(
        (np.asarray(vals, dtype=np.float64), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
        shape=(n, n),
    )
    return Graph.from_csr(mat.tocsr())


@dataclass(frozen=True, eq=False)
class Partition:
    labels: np.ndarray
    k: int

    @property
    def n(self) -> int:
        return len(self.labels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.labels, other.labels)

    def __hash__(self) -> int:
        return hash((self.k, self.labels.tobytes()))

    def communities(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.labels == c) for c in range(self.k)]

    def indicator(self) -> np.ndarray:
        """One-hot ``n x k`` matrix of the partition."""
        s = np.zeros((self.n, self.k))
        s[np.arange(self.n), self.labels] = 1.0
        return s


def canonicalize(labels: Sequence[int] | np.ndarray) -> Partition:
    """Relabel communities as 0..k-1 in order of first appearance."""
    raw = np.asarray(labels)
    if raw.size == 0:
        raise GraphError("cannot canonicalize an empty label array")
    _, first, inverse = np.unique(raw, return_index=True, return_inverse=True)
    # rank of each distinct label by its first position
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    out = rank[inverse.ravel()].astype(np.int64)
    return Partition(labels=_frozen(out), k=len(order))


def singletons(n: int) -> Partition:
    return canonicalize(np.arange(n))


def all_in_one(n: int) -> Partition:
    return canonicalize(np.zeros(n, dtype=np.int64))


def check_partition(g: Graph, p: Partition) -> None:
    if p.n != g.n:
        raise GraphError(f"partition has {p.n} labels, graph has {g.n} nodes")


def membership_matrix(p: Partition) -> sp.csr_matrix:
    n = p.n
    return sp.csr_matrix((np.ones(n), (np.arange(n), p.labels)), shape=(n, p.k))


def aggregate(g: Graph, p: Partition) -> Graph:
    """Collapse each community into one node.

    Internal weight becomes a self-loop, so ``m`` and modularity are preserved.
    """
    check_partition(g, p)
    member = membership_matrix(p)
    return Graph.from_csr((member.T @ g.matrix @ member).tocsr())
