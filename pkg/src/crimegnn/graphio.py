"""Edge-list and label file parsing, planted-partition generation, fixtures."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, TextIO

import numpy as np

from .graph import Graph, GraphError, Partition, build_graph, canonicalize


class ParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class EdgeListDocument:
    edges: list[tuple[int, int, float | None]]
    id_map: dict[int, int]

    @property
    def n(self) -> int:
        return len(self.id_map)

    def dense_edges(self) -> list[tuple[int, int, float]]:
        m = self.id_map
        return [(m[u], m[v], 1.0 if w is None else w) for u, v, w in self.edges]

    def to_graph(self) -> Graph:
        return build_graph(self.n, self.dense_edges())

    def node_ids(self) -> list[int]:
        """Original ids indexed by dense position."""
        return list(self.id_map)


def _lines(text: str | TextIO) -> Iterable[str]:
    if isinstance(text, str):
        return text.splitlines()
    return text


def _is_skipped(line: str) -> bool:
    s = line.strip()
    return not s or s[0] in "#%"


def _parse_id(tok: str, lineno: int) -> int:
    try:
        v = int(tok)
    except ValueError:
        raise ParseError(lineno, f"node id {tok!r} is not an integer") from None
    if v < 0:
        raise ParseError(lineno, f"node id {v} is negative")
    return v


def parse_edge_list(text: str | TextIO) -> EdgeListDocument:
    """Parse whitespace-separated ``u v [w]`` lines.

    Node ids are densified in order of first appearance; edges keep file
    order and are not merged here.
    """
    edges: list[tuple[int, int, float | None]] = []
    id_map: dict[int, int] = {}
    for lineno, line in enumerate(_lines(text), start=1):
        if _is_skipped(line):
            continue
        toks = line.split()
        if len(toks) not in (2, 3):
            raise ParseError(lineno, f"expected 2 or 3 fields, got {len(toks)}")
        u = _parse_id(toks[0], lineno)
        v = _parse_id(toks[1], lineno)
        w = None
        if len(toks) == 3:
            try:
                w = float(toks[2])
            except ValueError:
                raise ParseError(lineno, f"weight {toks[2]!r} is not a number") from None
            if not np.isfinite(w) or w <= 0:
                raise ParseError(lineno, f"weight {toks[2]} must be positive")
        for x in (u, v):
            if x not in id_map:
                id_map[x] = len(id_map)
        edges.append((u, v, w))
    return EdgeListDocument(edges=edges, id_map=id_map)


def parse_labels(text: str | TextIO, id_map: dict[int, int]) -> Partition:
    """Parse ``node community`` lines into a canonical partition over ``id_map``."""
    raw = np.full(len(id_map), -1, dtype=np.int64)
    seen = np.zeros(len(id_map), dtype=bool)
    for lineno, line in enumerate(_lines(text), start=1):
        if _is_skipped(line):
            continue
        toks = line.split()
        if len(toks) != 2:
            raise ParseError(lineno, f"expected 2 fields, got {len(toks)}")
        node = _parse_id(toks[0], lineno)
        try:
            comm = int(toks[1])
        except ValueError:
            raise ParseError(lineno, f"community {toks[1]!r} is not an integer") from None
        if node not in id_map:
            raise ParseError(lineno, f"unknown node id {node}")
        idx = id_map[node]
        if seen[idx]:
            raise ParseError(lineno, f"duplicate node id {node}")
        seen[idx] = True
        raw[idx] = comm
    if not seen.all():
        missing = [nid for nid, i in id_map.items() if not seen[i]]
        raise GraphError(f"no label for node(s) {missing[:10]}")
    return canonicalize(raw)


def write_edge_list(g: Graph, node_ids: list[int] | None = None) -> str:
    """Serialize ``g`` as an edge list; weights use ``repr`` so they round-trip."""
    ids = node_ids if node_ids is not None else list(range(g.n))
    lines = []
    for u, v, w in g.edges():
        if w == 1.0:
            lines.append(f"{ids[u]} {ids[v]}")
        else:
            lines.append(f"{ids[u]} {ids[v]} {w!r}")
    return "\n".join(lines) + ("\n" if lines else "")


def write_labels(p: Partition, node_ids: list[int] | None = None) -> str:
    ids = node_ids if node_ids is not None else list(range(p.n))
    return "".join(f"{ids[i]} {c}\n" for i, c in enumerate(p.labels.tolist()))


@dataclass(frozen=True)
class PlantedSpec:
    n: int
    k: int
    p_in: float
    p_out: float
    seed: int = 0

    def __post_init__(self):
        if not (self.n >= self.k >= 1):
            raise GraphError(f"need n >= k >= 1, got n={self.n}, k={self.k}")
        for name in ("p_in", "p_out"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise GraphError(f"{name}={p} outside [0, 1]")
        if self.seed < 0:
            raise GraphError("seed must be non-negative")
        if self.p_out > self.p_in:
            warnings.warn(f"p_out={self.p_out} exceeds p_in={self.p_in}", stacklevel=3)


def planted_groups(n: int, k: int) -> np.ndarray:
    """Contiguous, near-even groups; the first ``n % k`` get one extra node."""
    sizes = np.full(k, n // k)
    sizes[: n % k] += 1
    return np.repeat(np.arange(k), sizes)


def planted_partition(spec: PlantedSpec) -> tuple[Graph, Partition]:
    """Sample a planted-partition graph.

    Pairs ``u < v`` are visited lexicographically and each consumes exactly one
    uniform double from numpy's PCG64 generator seeded with ``spec.seed``; the
    edge exists iff the draw is below ``p_in`` (same group) or ``p_out``.
    """
    groups = planted_groups(spec.n, spec.k)
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    us, vs = np.triu_indices(spec.n, k=1)
    draws = rng.random(len(us))
    prob = np.where(groups[us] == groups[vs], spec.p_in, spec.p_out)
    keep = draws < prob
    edges = zip(us[keep].tolist(), vs[keep].tolist())
    return build_graph(spec.n, edges), canonicalize(groups)


def _two_triangles() -> list[tuple[int, int]]:
    return [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]


_FIXTURES = {
    "triangle": (3, [(0, 1), (1, 2), (0, 2)], None),
    "barbell6": (6, _two_triangles() + [(2, 3)], [0, 0, 0, 1, 1, 1]),
    "two_triangles": (6, _two_triangles(), [0, 0, 0, 1, 1, 1]),
    "path4": (4, [(0, 1), (1, 2), (2, 3)], None),
    "k3_3cliques": (
        9,
        [(a + o, b + o) for o in (0, 3, 6) for a, b in ((0, 1), (1, 2), (0, 2))],
        [0, 0, 0, 1, 1, 1, 2, 2, 2],
    ),
}

FIXTURE_NAMES = tuple(_FIXTURES)


def fixture(name: str) -> tuple[Graph, Partition | None]:
    try:
        n, edges, truth = _FIXTURES[name]
    except KeyError:
        raise GraphError(f"unknown fixture {name!r}; choose from {', '.join(_FIXTURES)}") from None
    return build_graph(n, edges), (canonicalize(truth) if truth is not None else None)
