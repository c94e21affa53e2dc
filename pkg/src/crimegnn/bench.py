"""Method dispatch, metric reports and partition/report file formats."""

from __future__ import annotations

import csv
import io
import json
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path

from .graph import Graph, GraphError, Partition, canonicalize
from .graphio import PlantedSpec, parse_edge_list, parse_labels, planted_partition, ParseError
from .infomap import infomap
from .louvain import louvain
from .model import TrainConfig, predict_partition, train
from .objectives import coverage, modularity, pairwise_f1
from .spectral import spectral_clustering

METHODS = ("gnn", "louvain", "spectral", "infomap")
REPORT_HEADER = ("method", "modularity", "coverage", "f1_score", "k", "seconds")
SEED_MASK = (1 << 64) - 1


def method_seed(seed: int, method: str) -> int:
    """Per-method seed: ``seed`` XOR the CRC-32 of the method name."""
    return (seed ^ zlib.crc32(method.encode("utf-8"))) & SEED_MASK


@dataclass
class Dataset:
    graph: Graph
    truth: Partition | None = None
    node_ids: list[int] | None = None
    name: str = ""

    def ids(self) -> list[int]:
        return self.node_ids if self.node_ids is not None else list(range(self.graph.n))


def load_dataset(edges: str | Path, labels: str | Path | None = None) -> Dataset:
    doc = parse_edge_list(Path(edges).read_text(encoding="utf-8"))
    if doc.n == 0:
        raise GraphError(f"{edges}: no edges")
    truth = None
    if labels is not None:
        truth = parse_labels(Path(labels).read_text(encoding="utf-8"), doc.id_map)
    return Dataset(graph=doc.to_graph(), truth=truth, node_ids=doc.node_ids(), name=str(edges))


def planted_dataset(spec: PlantedSpec) -> Dataset:
    g, truth = planted_partition(spec)
    return Dataset(graph=g, truth=truth, name=f"planted({spec.n},{spec.k},{spec.p_in},{spec.p_out},seed={spec.seed})")


@dataclass
class RunResult:
    method: str
    partition: Partition
    metrics: dict
    seed: int
    seconds: float
    config: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return self.partition.k


def evaluate(g: Graph, part: Partition, truth: Partition | None = None) -> dict:
    metrics = {"modularity": modularity(g, part), "coverage": coverage(g, part)}
    if truth is not None:
        metrics["f1_score"] = pairwise_f1(part, truth)
    return metrics


def run_method(
    g: Graph,
    method: str,
    k: int | None = None,
    seed: int = 0,
    truth: Partition | None = None,
    gnn_options: dict | None = None,
) -> RunResult:
    """Run one detector and score it.

    When ``k`` is missing for ``gnn``/``spectral`` it defaults to the number of
    communities Louvain finds on ``g`` with the same seed.
    """
    if method not in METHODS:
        raise GraphError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    config: dict = {"seed": seed}
    if method in ("gnn", "spectral") and k is None:
        k = louvain(g, seed)[0].k
        config["k_source"] = "louvain"
    start = time.perf_counter()
    if method == "louvain":
        part, _ = louvain(g, seed)
    elif method == "infomap":
        part, _ = infomap(g, seed)
    elif method == "spectral":
        part, _ = spectral_clustering(g, k, seed)
    else:
        cfg = TrainConfig(k=k, seed=seed, **(gnn_options or {}))
        params, _ = train(g, cfg)
        part, _ = predict_partition(g, params, cfg)
        config.update({key: v for key, v in vars(cfg).items() if key != "seed"})
    seconds = time.perf_counter() - start
    if k is not None:
        config["k"] = k
    return RunResult(method, part, evaluate(g, part, truth), seed, seconds, config)


@dataclass(frozen=True)
class ReportRow:
    method: str
    modularity: float
    coverage: float
    f1_score: float | None
    k: int
    seconds: float
    seed: int

    @classmethod
    def from_result(cls, r: RunResult) -> "ReportRow":
        return cls(
            r.method, r.metrics["modularity"], r.metrics["coverage"], r.metrics.get("f1_score"), r.k, r.seconds, r.seed
        )


def run_benchmark(
    data: Dataset,
    methods: list[str] | tuple[str, ...] = METHODS,
    seed: int = 0,
    k: int | None = None,
    gnn_options: dict | None = None,
) -> tuple[list[ReportRow], list[RunResult]]:
    """One row per method, in the requested order."""
    for m in methods:
        if m not in METHODS:
            raise GraphError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    results = [
        run_method(data.graph, m, k=k, seed=method_seed(seed, m), truth=data.truth, gnn_options=gnn_options)
        for m in methods
    ]
    return [ReportRow.from_result(r) for r in results], results


def _fmt(x: float | None) -> str:
    return "" if x is None else f"{x:.6f}"


def report_csv(rows: list[ReportRow], timing: bool = False) -> str:
    """CSV report; ``seconds`` stays blank unless ``timing`` so reruns are byte-identical."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_HEADER)
    for r in rows:
        w.writerow([r.method, _fmt(r.modularity), _fmt(r.coverage), _fmt(r.f1_score), r.k, _fmt(r.seconds) if timing else ""])
    return buf.getvalue()


def parse_report_csv(text: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != REPORT_HEADER:
        raise GraphError(f"unexpected report header {reader.fieldnames}")
    return list(reader)


def partition_json(result: RunResult, node_ids: list[int]) -> str:
    doc = {
        "method": result.method,
        "k": result.k,
        "seed": result.seed,
        "labels": result.partition.labels.tolist(),
        "nodes": list(node_ids),
        "metrics": result.metrics,
    }
    return json.dumps(doc, indent=2) + "\n"


def partition_csv(part: Partition, node_ids: list[int]) -> str:
    lines = ["node,community"] + [f"{nid},{c}" for nid, c in zip(node_ids, part.labels.tolist())]
    return "\n".join(lines) + "\n"


def read_partition(text: str, id_map: dict[int, int]) -> Partition:
    """Load a partition written as JSON or ``node,community`` CSV."""
    stripped = text.lstrip()
    n = len(id_map)
    if stripped.startswith("{"):
        doc = json.loads(text)
        labels = doc.get("labels")
        if not isinstance(labels, list):
            raise GraphError("partition JSON has no 'labels' list")
        nodes = doc.get("nodes")
        if nodes is None:
            if len(labels) != n:
                raise GraphError(f"partition has {len(labels)} labels, graph has {n} nodes")
            return canonicalize(labels)
        pairs = list(zip(nodes, labels))
        if len(nodes) != len(labels):
            raise GraphError("partition JSON 'nodes' and 'labels' differ in length")
    else:
        pairs = []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#") or line == "node,community":
                continue
            toks = line.split(",")
            if len(toks) != 2:
                raise ParseError(lineno, "expected 'node,community'")
            try:
                pairs.append((int(toks[0]), int(toks[1])))
            except ValueError:
                raise ParseError(lineno, "node and community must be integers") from None
    raw = [None] * n
    for nid, c in pairs:
        if nid not in id_map:
            raise GraphError(f"partition names node {nid}, which is not in the graph")
        idx = id_map[nid]
        if raw[idx] is not None:
            raise GraphError(f"node {nid} assigned twice")
        raw[idx] = int(c)
    if any(c is None for c in raw):
        raise GraphError("partition does not cover every graph node")
    return canonicalize(raw)
