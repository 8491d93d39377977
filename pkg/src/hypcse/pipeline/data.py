"""CSV ingestion for feature matrices with one label column."""

from __future__ import annotations

import csv
from importlib import resources
from pathlib import Path

import numpy as np

BUILTIN = {"zoo": "zoo.csv", "iris": "iris.csv"}


class DataError(ValueError):
    pass


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def resolve_dataset(name_or_path: str) -> Path:
    """Bundled dataset name (``zoo``, ``iris``) or a filesystem path."""
    if name_or_path in BUILTIN:
        return Path(str(resources.files("hypcse.datasets") / BUILTIN[name_or_path]))
    return Path(name_or_path)


def load_dataset(path, label_column="-1") -> tuple[np.ndarray, np.ndarray]:
    """Read ``(features, labels)`` from a CSV file.

    ``label_column`` is a header name or an integer index (negative counts
    from the end). A header row is detected when any of its feature cells is
    non-numeric.
    """
    path = resolve_dataset(str(path))
    if not path.is_file():
        raise DataError(f"dataset file not found: {path}")
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if any(cell.strip() for cell in r)]
    if not rows:
        raise DataError(f"{path}: file is empty")
    width = len(rows[0])
    if width < 2:
        raise DataError(f"{path}: need at least one feature column and one label column")
    label = str(label_column).strip()
    try:
        col = int(label)
    except ValueError:
        col = None
    header = None
    if col is None:
        header = [c.strip() for c in rows[0]]
        if label not in header:
            raise DataError(f"{path}: no column named {label!r}")
        col = header.index(label)
    if not -width <= col < width:
        raise DataError(f"{path}: label column {col} out of range for {width} columns")
    col %= width
    if header is None and not all(_is_number(c) for i, c in enumerate(rows[0]) if i != col):
        header = rows[0]
    body = rows[1:] if header is not None else rows
    start = 2 if header is not None else 1
    if not body:
        raise DataError(f"{path}: no data rows")
    feats, labels, bad = [], [], []
    for lineno, row in enumerate(body, start):
        if len(row) != width:
            raise DataError(f"{path}: line {lineno} has {len(row)} columns, expected {width}")
        cells = [c.strip() for i, c in enumerate(row) if i != col]
        if not all(_is_number(c) for c in cells):
            bad.append(lineno)
            continue
        feats.append([float(c) for c in cells])
        labels.append(row[col].strip())
    if bad:
        shown = ", ".join(map(str, bad[:10]))
        raise DataError(f"{path}: non-numeric feature values on line(s) {shown}")
    X = np.array(feats, dtype=float)
    if not np.isfinite(X).all():
        raise DataError(f"{path}: features contain non-finite values")
    return X, np.array(labels)
