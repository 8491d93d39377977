"""Command line entry point: ``hypcse run``, ``hypcse eval`` and ``hypcse oracle``.

Exit codes: 0 success, 1 usage or configuration error, 2 data or I/O error,
3 numeric failure, 4 an oracle check reported a failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .. import oracles
from ..entropy import dasgupta_cost, dendrogram_purity, structural_entropy
from ..graph import GraphError, WeightedGraph
from ..trees import Dendrogram, TreeError, parse_newick
from .config import ConfigError, RunConfig, load_config
from .data import DataError
from .export import export
from .train import NumericError, run_training

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC, EXIT_CHECK = 0, 1, 2, 3, 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hypcse", description="Hyperbolic structural-entropy hierarchical clustering.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="train on a dataset and export the tree and metrics")
    run.add_argument("--config", help="flat key = value configuration file")
    for f in dataclasses.fields(RunConfig):
        run.add_argument(f"--{f.name}", dest=f"cfg_{f.name}", metavar=f.type.upper(), default=None)

    ev = sub.add_parser("eval", help="score a Newick tree on a weighted edge list")
    ev.add_argument("--tree", required=True, help="Newick file with integer leaf labels")
    ev.add_argument("--graph", required=True, help="CSV edge list: source,target,weight")
    ev.add_argument("--labels", help="CSV with one label per vertex")

    oracle = sub.add_parser("oracle", help="run a property suite against its oracle")
    oracle.add_argument("--check", required=True, choices=sorted(oracles.CHECKS))
    return parser


def _rows(path: Path) -> list[list[str]]:
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    with open(path, newline="") as fh:
        return [r for r in csv.reader(fh) if any(c.strip() for c in r)]


def read_edge_list(path, n: int) -> WeightedGraph:
    rows = _rows(Path(path))
    edges = []
    for lineno, row in enumerate(rows, 1):
        if len(row) < 2:
            raise DataError(f"{path}:{lineno}: expected source,target[,weight]")
        try:
            i, j = int(row[0]), int(row[1])
            w = float(row[2]) if len(row) > 2 else 1.0
        except ValueError:
            if lineno == 1:
                continue
            raise DataError(f"{path}:{lineno}: non-numeric edge entry") from None
        edges.append((i, j, w))
    try:
        return WeightedGraph.from_edges(n, edges)
    except GraphError as err:
        raise DataError(f"{path}: {err}") from err


def read_labels(path, n: int) -> np.ndarray:
    rows = _rows(Path(path))
    if len(rows) == n + 1:
        rows = rows[1:]
    if len(rows) != n:
        raise DataError(f"{path}: expected {n} labels, found {len(rows)}")
    return np.array([r[-1].strip() for r in rows])


def evaluate_files(tree_path, graph_path, labels_path=None) -> dict:
    """Scores of a saved tree: SE always; DP and Dasgupta cost for binary trees."""
    path = Path(tree_path)
    if not path.is_file():
        raise DataError(f"file not found: {path}")
    try:
        T, _ = parse_newick(path.read_text())
    except (TreeError, KeyError, ValueError, IndexError) as err:
        raise DataError(f"{path}: cannot parse Newick: {err}") from err
    G = read_edge_list(graph_path, T.num_leaves)
    out = {"se": structural_entropy(G, T), "dp": None, "dasgupta": None}
    if T.is_binary():
        D = Dendrogram.from_partition_tree(T)
        out["dasgupta"] = dasgupta_cost(G, D)
        if labels_path is not None:
            out["dp"] = dendrogram_purity(D, read_labels(labels_path, T.num_leaves))
    else:
        print("tree is not binary: only SE is reported", file=sys.stderr)
    return out


def _run(args) -> int:
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None}
    cfg = load_config(args.config, overrides)
    out_dir = cfg.output_dir or f"hypcse-{Path(cfg.dataset).stem}-seed{cfg.seed}"

    def log(row):
        print(f"epoch {row.epoch:4d}  total {row.total:.5f}  se {row.se:.5f}  dp {row.dp:.4f}",
              file=sys.stderr)

    with warnings.catch_warnings():
        warnings.simplefilter("always")
        report = run_training(cfg, log=log)
    for path in export(report, out_dir, notice=lambda m: print(m, file=sys.stderr)):
        print(path)
    print(json.dumps({"best_epoch": report.best_epoch, **report.metrics}))
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return _run(args)
        if args.command == "eval":
            print(json.dumps(evaluate_files(args.tree, args.graph, args.labels)))
            return EXIT_OK
        result = oracles.run_check(args.check)
        print(result.summary())
        return EXIT_OK if result.passed else EXIT_CHECK
    except (UsageError, ConfigError) as err:
        print(f"hypcse: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as err:
        print(f"hypcse: {err}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as err:
        print(f"hypcse: numeric failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
