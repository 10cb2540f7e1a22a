"""CSV ingestion and export for training sets.

Format: one row per example, feature columns followed by a label column in
{-1, +1} (or {0, 1}, with 0 read as -1). A header row is optional and is
detected by a non-numeric first row.
"""

import csv
import io

import numpy as np

from .errors import ConfigError
from .fsutil import atomic_write_text
from .measures import TrainingSet


def _is_numeric_row(row):
    try:
        [float(v) for v in row]
    except ValueError:
        return False
    return True


def load_csv(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(v.strip() for v in r)]
    if not rows:
        raise ConfigError(f"{path}: no rows")
    start = 0 if _is_numeric_row(rows[0]) else 1
    width = len(rows[start]) if start < len(rows) else 0
    if width < 2:
        raise ConfigError(f"{path}: need at least one feature column and a label column")
    data = []
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if len(row) != width:
            raise ConfigError(f"expected {width} columns, got {len(row)}", line=lineno)
        try:
            data.append([float(v) for v in row])
        except ValueError as exc:
            raise ConfigError(str(exc), line=lineno) from None
    arr = np.asarray(data, dtype=np.float64)
    labels = arr[:, -1]
    if np.all((labels == 0) | (labels == 1)):
        labels = np.where(labels == 0, -1, 1)
    elif not np.all((labels == 1) | (labels == -1)):
        raise ConfigError(f"{path}: labels must be in {{-1,+1}} or {{0,1}}", field="label")
    return TrainingSet(arr[:, :-1], labels.astype(np.int8))


def save_csv(S, path, header=True):
    """Write ``S`` atomically (temp file + rename)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow([f"x{j}" for j in range(S.n_features)] + ["label"])
    for xi, yi in zip(S.X, S.y):
        w.writerow([_fmt(v) for v in xi] + [int(yi)])
    atomic_write_text(path, buf.getvalue())


def _fmt(v):
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)
