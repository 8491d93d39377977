"""Run artifacts: metrics, trees, loss curves, checkpoints and the Poincare disk picture."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np
import torch

from ..graph import WeightedGraph
from ..model.checkpoint import save_checkpoint
from ..trees import Dendrogram
from .train import RunReport

LOSS_COLUMNS = ("epoch", "cse", "con", "cen", "total", "se", "dp")
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
           "#7f7f7f", "#bcbd22", "#17becf")


def _number(value: float):
    return None if value is None or not math.isfinite(value) else float(value)


def metrics_json(report: RunReport) -> str:
    m = report.metrics
    payload = {"dp": _number(m["dp"]), "se": _number(m["se"]), "dasgupta": _number(m["dasgupta"]),
               "best_epoch": int(report.best_epoch), "config": report.config.to_dict()}
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def losses_csv(report: RunReport) -> str:
    """Per-epoch curves with round-trip float formatting, so equal runs give equal bytes."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(LOSS_COLUMNS)
    for row in report.epochs:
        writer.writerow([row.epoch] + [repr(float(getattr(row, c))) for c in LOSS_COLUMNS[1:]])
    return buf.getvalue()


def graph_csv(G: WeightedGraph) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("source", "target", "weight"))
    for i, j, w in G.edges():
        writer.writerow((i, j, repr(float(w))))
    return buf.getvalue()


def disk_svg(points: np.ndarray, labels=None, size: int = 480) -> str:
    """Scatter of 2-D Poincare points inside the unit circle, colored by label."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValueError("disk_svg needs 2-D points")
    half = size / 2.0
    scale = 0.95 * half
    if labels is None:
        codes = np.zeros(len(points), dtype=int)
    else:
        _, codes = np.unique(np.asarray(labels).astype(str), return_inverse=True)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">',
           f'<circle cx="{half}" cy="{half}" r="{scale:.2f}" fill="none" stroke="#444" stroke-width="1"/>']
    for (x, y), c in zip(points, codes):
        out.append(f'<circle cx="{half + scale * x:.3f}" cy="{half - scale * y:.3f}" r="3" '
                   f'fill="{PALETTE[c % len(PALETTE)]}"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def export(report: RunReport, out_dir, tree: Dendrogram | None = None, Z=None, notice=print) -> list[Path]:
    """Write every artifact of a finished run into ``out_dir`` and return the written paths.

    ``disk.svg`` is produced only for 2-D embeddings; other dimensions are
    skipped with a notice.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise OSError(f"cannot create output directory {out}: {err}") from err
    tree = report.tree if tree is None else tree
    Z = report.embedding if Z is None else np.asarray(Z)
    files = {
        "metrics.json": metrics_json(report),
        "tree.newick": tree.to_newick() + "\n",
        "merges.json": tree.merges_json() + "\n",
        "losses.csv": losses_csv(report),
        "graph.csv": graph_csv(report.graph0),
    }
    if report.labels is not None:
        files["labels.csv"] = "label\n" + "".join(f"{x}\n" for x in report.labels)
    if Z.shape[1] == 2:
        files["disk.svg"] = disk_svg(Z, report.labels)
    else:
        notice(f"disk.svg skipped: embedding dimension is {Z.shape[1]}, not 2")
    written = []
    for name, text in files.items():
        path = out / name
        path.write_text(text)
        written.append(path)
    anchor = report.best_anchor
    ckpt = out / "checkpoint.npz"
    save_checkpoint(ckpt, {
        "model": report.best_params,
        "anchor": {"rows": torch.as_tensor(anchor.rows, dtype=torch.float64),
                   "cols": torch.as_tensor(anchor.cols, dtype=torch.float64),
                   "weights": torch.as_tensor(anchor.weights, dtype=torch.float64)},
    })
    written.append(ckpt)
    return written
