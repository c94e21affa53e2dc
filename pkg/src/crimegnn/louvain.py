"""Louvain modularity optimization: greedy local moves plus aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import Graph, GraphError, Partition, aggregate, canonicalize
from .objectives import community_totals, modularity

# moves must beat this to count, so float noise cannot cycle
GAIN_EPS = 1e-12


@dataclass
class LouvainState:
    """Community bookkeeping for one aggregation level.

    ``w_in[c]`` is the directed internal weight ``sum_{j,k in c} A_jk`` and
    ``d_tot[c]`` the degree sum; both are indexed by community id, which at
    the start of a level equals the node id.
    """

    graph: Graph
    labels: np.ndarray
    w_in: np.ndarray
    d_tot: np.ndarray
    # original node -> node of this level's graph
    origin: np.ndarray

    @classmethod
    def singletons(cls, g: Graph, origin: np.ndarray | None = None) -> "LouvainState":
        labels = np.arange(g.n)
        return cls(
            graph=g,
            labels=labels,
            w_in=g.self_loops.copy(),
            d_tot=g.degrees.copy(),
            origin=np.arange(g.n) if origin is None else origin,
        )

    @classmethod
    def from_labels(cls, g: Graph, labels) -> "LouvainState":
        st = cls.singletons(g)
        st.labels = np.asarray(labels, dtype=np.int64).copy()
        if st.labels.shape != (g.n,) or st.labels.min() < 0 or st.labels.max() >= g.n:
            raise GraphError("community ids must be node-sized labels in [0, n)")
        st.w_in, st.d_tot = np.zeros(g.n), np.zeros(g.n)
        part = canonicalize(st.labels)
        w_in, d_tot = community_totals(g, part)
        # scatter canonical totals back onto the raw ids
        first = {}
        for v, c in enumerate(st.labels.tolist()):
            first.setdefault(c, part.labels[v])
        for raw, canon in first.items():
            st.w_in[raw] = w_in[canon]
            st.d_tot[raw] = d_tot[canon]
        return st

    def links(self, v: int) -> dict[int, float]:
        """Weight from ``v`` to each neighboring community, self-loop excluded."""
        nbrs, ws = self.graph.neighbors(v)
        out: dict[int, float] = {}
        for u, w in zip(nbrs.tolist(), ws.tolist()):
            if u != v:
                c = int(self.labels[u])
                out[c] = out.get(c, 0.0) + w
        return out

    def partition(self) -> Partition:
        return canonicalize(self.labels)

    def original_partition(self) -> Partition:
        return canonicalize(self.labels[self.origin])

    def move(self, v: int, target: int, links: dict[int, float] | None = None) -> None:
        cur = int(self.labels[v])
        if target == cur:
            return
        if links is None:
            links = self.links(v)
        loop = self.graph.self_loops[v]
        d_v = self.graph.degrees[v]
        self.w_in[cur] -= 2.0 * links.get(cur, 0.0) + loop
        self.d_tot[cur] -= d_v
        self.w_in[target] += 2.0 * links.get(target, 0.0) + loop
        self.d_tot[target] += d_v
        self.labels[v] = target

    def check_totals(self) -> None:
        """Compare tracked totals with a recomputation (used by tests)."""
        part = self.partition()
        w_in, d_tot = community_totals(self.graph, part)
        for c in range(part.k):
            raw = int(self.labels[np.flatnonzero(part.labels == c)[0]])
            if not (np.isclose(self.w_in[raw], w_in[c], atol=1e-9) and np.isclose(self.d_tot[raw], d_tot[c], atol=1e-9)):
                raise AssertionError(f"community {raw}: tracked totals drifted")


def delta_q(state: LouvainState, v: int, target: int, links: dict[int, float] | None = None) -> float:
    """Modularity change from moving ``v`` out of its community into ``target``."""
    cur = int(state.labels[v])
    if target == cur:
        return 0.0
    if links is None:
        links = state.links(v)
    m = state.graph.total_weight
    d_v = state.graph.degrees[v]
    d_cur_rest = state.d_tot[cur] - d_v
    gain = (links.get(target, 0.0) - links.get(cur, 0.0)) / m
    return gain - d_v * (state.d_tot[target] - d_cur_rest) / (2.0 * m * m)


def local_move_pass(state: LouvainState, order) -> bool:
    """Visit nodes in ``order`` and apply the best strictly positive move for each.

    Mutates ``state``; returns whether any node moved.
    """
    improved = False
    for v in order:
        v = int(v)
        links = state.links(v)
        cur = int(state.labels[v])
        best, best_gain = cur, GAIN_EPS
        for c in sorted(links):
            if c == cur:
                continue
            gain = delta_q(state, v, c, links)
            if gain > best_gain:
                best, best_gain = c, gain
        if best != cur:
            state.move(v, best, links)
            improved = True
    return improved


def louvain(g: Graph, seed: int = 0) -> tuple[Partition, float]:
    """Multi-level Louvain; node order in each pass is a seeded shuffle."""
    if g.total_weight <= 0:
        raise GraphError("graph has no edges (m == 0)")
    rng = np.random.default_rng(seed)
    state = LouvainState.singletons(g)
    while True:
        moved = False
        while local_move_pass(state, rng.permutation(state.graph.n)):
            moved = True
        if not moved:
            break
        level = state.partition()
        origin = level.labels[state.origin]
        state = LouvainState.singletons(aggregate(state.graph, level), origin=origin)
    part = state.original_partition()
    return part, modularity(g, part)
