"""Command-line entry point: ``detect``, ``bench``, ``generate``, ``eval``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import (
    METHODS,
    Dataset,
    evaluate,
    load_dataset,
    partition_csv,
    partition_json,
    planted_dataset,
    read_partition,
    report_csv,
    run_benchmark,
    run_method,
)
from .graphio import PlantedSpec, parse_edge_list, parse_labels, planted_partition, write_edge_list, write_labels
from .model import TrainConfig, save_model, train
from .spectral import ConvergenceError

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _planted(text: str) -> tuple[int, int, float, float]:
    parts = text.split(",")
    if len(parts) != 4:
        raise argparse.ArgumentTypeError("expected n,k,p_in,p_out")
    try:
        return int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])
    except ValueError:
        raise argparse.ArgumentTypeError("expected n,k,p_in,p_out") from None


def _seed(text: str) -> int:
    v = int(text)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _add_dataset(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--input", type=Path, help="edge-list file")
    src.add_argument("--planted", type=_planted, metavar="N,K,P_IN,P_OUT", help="planted-partition graph")
    p.add_argument("--truth", type=Path, help="ground-truth label file (with --input)")
    p.add_argument("--seed", type=_seed, default=0)


def _add_gnn(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("gnn options")
    g.add_argument("--epochs", type=int)
    g.add_argument("--lr", type=float)
    g.add_argument("--hidden", type=int)
    g.add_argument("--features", type=int, dest="feature_dim")
    g.add_argument("--lam", type=float, help="collapse penalty weight")
    g.add_argument("--depth", type=int)


def _gnn_options(args) -> dict:
    keys = ("epochs", "lr", "hidden", "feature_dim", "lam", "depth")
    return {k: getattr(args, k) for k in keys if getattr(args, k) is not None}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="crimegnn", description="Community detection with a modularity-trained GNN and baselines.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    d = sub.add_parser("detect", help="detect communities with one method")
    _add_dataset(d)
    d.add_argument("--method", choices=METHODS, default="gnn")
    d.add_argument("--k", type=int)
    d.add_argument("--output", type=Path)
    d.add_argument("--format", choices=("json", "csv"), default="json")
    d.add_argument("--save-model", type=Path, help="write trained gnn parameters here")
    _add_gnn(d)

    b = sub.add_parser("bench", help="run several methods and write a metric report")
    _add_dataset(b)
    b.add_argument("--methods", default=",".join(METHODS))
    b.add_argument("--k", type=int)
    b.add_argument("--report", type=Path)
    b.add_argument("--timing", action="store_true", help="fill the seconds column (breaks byte-identical reruns)")
    _add_gnn(b)

    gen = sub.add_parser("generate", help="write a planted-partition graph")
    gen.add_argument("--planted", type=_planted, required=True, metavar="N,K,P_IN,P_OUT")
    gen.add_argument("--seed", type=_seed, default=0)
    gen.add_argument("--output", type=Path, required=True, help="edge-list file")
    gen.add_argument("--labels", type=Path, help="label file (default: OUTPUT.labels)")

    e = sub.add_parser("eval", help="score a saved partition")
    e.add_argument("--partition", type=Path, required=True)
    e.add_argument("--input", type=Path, required=True)
    e.add_argument("--truth", type=Path)
    return parser


def _dataset(args) -> Dataset:
    if args.planted is not None:
        if args.truth is not None:
            raise UsageError("--truth only applies to --input")
        return planted_dataset(PlantedSpec(*args.planted, seed=args.seed))
    if args.input is None:
        raise UsageError(f"{args.command}: one of --input or --planted is required")
    return load_dataset(args.input, args.truth)


def _emit(text: str, path: Path | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        path.write_text(text, encoding="utf-8")


def cmd_detect(args) -> int:
    data = _dataset(args)
    # planted truth is only used by `bench`; detect scores f1 against --truth
    truth = data.truth if args.input is not None else None
    opts = _gnn_options(args)
    result = run_method(data.graph, args.method, k=args.k, seed=args.seed, truth=truth, gnn_options=opts)
    if args.save_model is not None:
        if args.method != "gnn":
            raise UsageError("--save-model requires --method gnn")
        cfg = TrainConfig(k=result.config["k"], seed=args.seed, **opts)
        params, _ = train(data.graph, cfg)
        args.save_model.write_text(save_model(params, cfg), encoding="utf-8")
    if args.format == "json":
        _emit(partition_json(result, data.ids()), args.output)
    else:
        _emit(partition_csv(result.partition, data.ids()), args.output)
    return EXIT_OK


def cmd_bench(args) -> int:
    data = _dataset(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    unknown = [m for m in methods if m not in METHODS]
    if not methods or unknown:
        raise UsageError(f"bench: unknown or empty method list {args.methods!r}")
    rows, _ = run_benchmark(data, methods, seed=args.seed, k=args.k, gnn_options=_gnn_options(args))
    _emit(report_csv(rows, timing=args.timing), args.report)
    return EXIT_OK


def cmd_generate(args) -> int:
    g, truth = planted_partition(PlantedSpec(*args.planted, seed=args.seed))
    labels = args.labels if args.labels is not None else args.output.with_name(args.output.name + ".labels")
    args.output.write_text(write_edge_list(g), encoding="utf-8")
    labels.write_text(write_labels(truth), encoding="utf-8")
    return EXIT_OK


def cmd_eval(args) -> int:
    doc = parse_edge_list(args.input.read_text(encoding="utf-8"))
    g = doc.to_graph()
    part = read_partition(args.partition.read_text(encoding="utf-8"), doc.id_map)
    truth = parse_labels(args.truth.read_text(encoding="utf-8"), doc.id_map) if args.truth else None
    out = {"k": part.k, "metrics": evaluate(g, part, truth)}
    sys.stdout.write(json.dumps(out, indent=2) + "\n")
    return EXIT_OK


COMMANDS = {"detect": cmd_detect, "bench": cmd_bench, "generate": cmd_generate, "eval": cmd_eval}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
