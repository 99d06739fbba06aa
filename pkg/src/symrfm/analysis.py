"""Accuracy, feature-matrix alignment and orbit-based predictions of which test points are learned."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from PIL import Image

from .groups import Subgroup
from .representation import rep_sum


def accuracy(predictions, labels) -> float:
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise ValueError(f"shape mismatch: {predictions.shape} vs {labels.shape}")
    if predictions.size == 0:
        raise ValueError("accuracy of an empty set is undefined")
    return float(np.mean(predictions == labels))


# --------------------------------------------------------------------------
# alignment


@dataclass(frozen=True)
class AlignmentScore:
    support_mass_fraction: float
    pearson_r: float
    target: str

    def as_dict(self) -> dict:
        return {"support_mass_fraction": self.support_mass_fraction,
                "pearson_r": self.pearson_r, "target": self.target}


def support_mask(H) -> np.ndarray:
    return rep_sum(H) > 0


def alignment(M, H) -> AlignmentScore:
    """How much of ``|M|`` sits on the support of ``sum_{h in H} Pi(h)``."""
    M = np.asarray(M, float)
    elements = H.elements if isinstance(H, Subgroup) else tuple(H)
    if not elements:
        raise ValueError("empty subgroup")
    d = 2 * elements[0].group.order
    if M.shape != (d, d):
        raise ValueError(f"matrix is {M.shape}, representation is {d}x{d}")
    mask = support_mask(elements)
    A = np.abs(M)
    total = A.sum()
    frac = float(A[mask].sum() / total) if total > 0 else float("nan")
    a, m = A.ravel(), mask.ravel().astype(float)
    if a.std() == 0 or m.std() == 0:
        r = float("nan")
    else:
        r = float(np.corrcoef(a, m)[0, 1])
    target = "+".join(f"Pi({h})" for h in elements)
    return AlignmentScore(frac, r, target)


# --------------------------------------------------------------------------
# orbit predictions


@dataclass(frozen=True)
class OrbitPrediction:
    predicted_correct: frozenset  # dataset rows
    actual_correct: frozenset
    precision: Optional[float]
    recall: Optional[float]

    @property
    def exact(self) -> bool:
        return self.predicted_correct == self.actual_correct

    def as_dict(self) -> dict:
        return {"predicted": len(self.predicted_correct), "actual": len(self.actual_correct),
                "overlap": len(self.predicted_correct & self.actual_correct),
                "precision": self.precision, "recall": self.recall}


def precision_recall(predicted, actual):
    """Precision and recall of ``predicted`` against ``actual``.

    Both empty counts as a perfect match; any other undefined ratio is ``None``.
    """
    predicted, actual = set(predicted), set(actual)
    if not predicted and not actual:
        return 1.0, 1.0
    hit = len(predicted & actual)
    precision = hit / len(predicted) if predicted else None
    recall = hit / len(actual) if actual else None
    return precision, recall


def orbit_rows(H, rows) -> np.ndarray:
    """Rows reachable from ``rows`` under every ``h`` in ``H``."""
    elements = H.elements if isinstance(H, Subgroup) else tuple(H)
    rows = np.asarray(rows, dtype=np.intp)
    if not elements:
        return np.zeros(0, dtype=np.intp)
    return np.unique(np.concatenate([h.pair_map()[rows] for h in elements]))


def orbit_predict(partition, H, run) -> OrbitPrediction:
    """Compare ``Orbit_H(train) & test`` with the test rows the run got right."""
    if not np.array_equal(run.test_rows, partition.test):
        raise ValueError("run was not produced on this partition")
    predicted = np.intersect1d(orbit_rows(H, partition.train), partition.test)
    actual = partition.test[np.asarray(run.test_correct, bool)]
    pset = frozenset(int(r) for r in predicted)
    aset = frozenset(int(r) for r in actual)
    p, r = precision_recall(pset, aset)
    return OrbitPrediction(pset, aset, p, r)


# --------------------------------------------------------------------------
# pictures and summaries


def heatmap_image(matrix) -> Image.Image:
    A = np.asarray(matrix, float)
    if A.ndim != 2 or not np.all(np.isfinite(A)):
        raise ValueError("heatmap needs a finite 2-D matrix")
    lo, hi = A.min(), A.max()
    if hi > lo:
        scaled = (A - lo) / (hi - lo)
    else:
        scaled = np.full_like(A, 0.5)
    return Image.fromarray(np.round(scaled * 255).astype(np.uint8), mode="L")


def heatmap(matrix, path, scale: int = 1) -> Path:
    """Write a grayscale PNG (min black, max white), each entry ``scale`` pixels wide."""
    img = heatmap_image(matrix)
    if scale > 1:
        img = img.resize((img.width * scale, img.height * scale), Image.NEAREST)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    img.save(path, format="PNG")
    return path


def matrix_stats(matrix, rtol: float = 1e-8) -> dict:
    A = np.asarray(matrix, float)
    sv = np.linalg.svd(A, compute_uv=False)
    rank = int(np.sum(sv > rtol * sv[0])) if sv.size and sv[0] > 0 else 0
    return {"min": float(A.min()), "max": float(A.max()),
            "mass": float(np.abs(A).sum()), "rank": rank}


def normalized_loss(losses) -> np.ndarray:
    """Scale a loss curve so its largest value is 1."""
    losses = np.asarray(losses, float)
    top = np.nanmax(losses) if losses.size else 0.0
    return losses / top if top > 0 else losses
