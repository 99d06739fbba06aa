"""On-disk formats: matrix dumps, per-run metric tables and the results table."""

from __future__ import annotations

import csv
import json
import os
import re
from pathlib import Path

import numpy as np

MATRIX_MAGIC = "SYMRFM-MATRIX/1"
_HEADER_RE = re.compile(
    r"^SYMRFM-MATRIX/1 rows=(\d+) cols=(\d+) dtype=float64 order=C endian=little\n$"
)


def save_matrix(path, M, csv_mirror: bool = False) -> Path:
    """One ASCII header line, then row-major little-endian float64 payload."""
    M = np.asarray(M, dtype="<f8")
    if M.ndim != 2:
        raise ValueError("only 2-D matrices can be dumped")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = f"{MATRIX_MAGIC} rows={M.shape[0]} cols={M.shape[1]} dtype=float64 order=C endian=little\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(M).tobytes(order="C"))
    if csv_mirror:
        np.savetxt(path.with_suffix(".csv"), M, delimiter=",", fmt="%.17g")
    return path


def load_matrix(path) -> np.ndarray:
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii", errors="replace")
        m = _HEADER_RE.match(header)
        if not m:
            raise ValueError(f"{path}: not a matrix dump")
        rows, cols = int(m.group(1)), int(m.group(2))
        payload = fh.read()
    if len(payload) != rows * cols * 8:
        raise ValueError(f"{path}: payload has {len(payload)} bytes, expected {rows * cols * 8}")
    return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).astype(float)


def save_history(path, history) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [h.as_dict() for h in history]
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    return path


def load_history(path) -> list:
    with open(path, newline="") as fh:
        return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(fh)]


RESULT_FIELDS = [
    "experiment", "config_hash", "label", "seed", "status", "error",
    "task", "kernel", "partition", "m0", "n_train", "n_test",
    "train_accuracy", "test_accuracy", "train_loss", "test_loss", "seconds",
    "alignment", "orbit_precision", "orbit_recall", "artifacts",
]


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True)
    return v


class ResultsWriter:
    """Append-only CSV writer; one instance per output directory, owned by one process."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        new = not self.path.exists() or self.path.stat().st_size == 0
        self._fh = open(self.path, "a", newline="")
        self._w = csv.DictWriter(self._fh, fieldnames=RESULT_FIELDS, extrasaction="ignore")
        if new:
            self._w.writeheader()
            self._fh.flush()

    def append(self, row: dict) -> None:
        self._w.writerow({k: _cell(row.get(k)) for k in RESULT_FIELDS})
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_results(path) -> list:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def summarize(rows, path=None) -> list:
    """Mean, min and max of accuracies across seeds, grouped by (experiment, label)."""
    groups = {}
    for r in rows:
        key = (r["experiment"], r["label"])
        groups.setdefault(key, []).append(r)
    out = []
    for (exp, label), rs in groups.items():
        ok = [r for r in rs if r["status"] == "ok"]
        entry = {"experiment": exp, "label": label, "runs": len(rs), "failed": len(rs) - len(ok)}
        for col in ("train_accuracy", "test_accuracy"):
            vals = np.array([float(r[col]) for r in ok if r[col] not in ("", "nan")])
            entry[f"{col}_mean"] = float(vals.mean()) if vals.size else ""
            entry[f"{col}_min"] = float(vals.min()) if vals.size else ""
            entry[f"{col}_max"] = float(vals.max()) if vals.size else ""
        out.append(entry)
    if path is not None and out:
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(out[0]))
            w.writeheader()
            w.writerows(out)
    return out
