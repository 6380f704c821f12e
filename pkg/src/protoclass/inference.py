"""Winner-takes-all classification over a trained model.

Each class reports the best similarity between the query and its prototypes;
the class with the highest local winner takes the label.  In the default
"uniform" scale mode similarity is 1 / (1 + d^2), so the decision coincides
exactly with nearest-prototype classification; "per-cloud" mode scales each
cloud's kernel by its own squared radius instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .density import EPS
from .errors import DimensionError, StateError
from .learner import ClassModel, DataCloud, Model

SCALE_MODES = ("uniform", "per-cloud")


@dataclass(frozen=True)
class Prediction:
    """Label plus the evidence behind it (the explanation hook)."""

    label: int
    per_class_scores: tuple[tuple[int, float], ...]
    winning_cloud: int
    winning_similarity: float


def _check_mode(scale_mode: str) -> None:
    if scale_mode not in SCALE_MODES:
        raise ValueError(f"unknown scale mode {scale_mode!r}, expected one of {SCALE_MODES}")


def similarity(cloud: DataCloud, x, scale_mode: str = "uniform") -> float:
    """Cauchy similarity of x to one prototype, in (0, 1]."""
    _check_mode(scale_mode)
    x = np.asarray(x, dtype=np.float64)
    p = np.asarray(cloud.prototype, dtype=np.float64)
    if x.shape != p.shape:
        raise DimensionError(f"dimension mismatch: {x.shape} vs {p.shape}")
    d = x - p
    d2 = float(np.dot(d, d))
    sigma_sq = 1.0 if scale_mode == "uniform" else max(float(cloud.radius_sq), EPS)
    return 1.0 / (1.0 + d2 / sigma_sq)


def _local_best(class_model: ClassModel, x: np.ndarray, scale_mode: str) -> tuple[float, int]:
    if class_model.n_clouds == 0:
        raise StateError(f"class {class_model.class_id} has no clouds")
    diffs = class_model.prototypes - x
    d2 = (diffs * diffs).sum(axis=1)
    if scale_mode == "uniform":
        sims = 1.0 / (1.0 + d2)
    else:
        sims = 1.0 / (1.0 + d2 / np.maximum(class_model.radii_sq, EPS))
    j = int(np.argmax(sims))
    return float(sims[j]), j


def local_decision(class_model: ClassModel, x, scale_mode: str = "uniform") -> float:
    """Winner-takes-all within one class: the best prototype similarity."""
    _check_mode(scale_mode)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != class_model.dim:
        raise DimensionError(f"expected a vector of dimension {class_model.dim}")
    lam, _ = _local_best(class_model, x, scale_mode)
    return lam


def global_decision(per_class) -> int:
    """Label of the maximal score; exact ties go to the lowest class id."""
    scores = sorted(per_class)
    if not scores:
        raise StateError("no per-class scores to decide over")
    best_cid, best = scores[0]
    for cid, lam in scores[1:]:
        if lam > best:
            best_cid, best = cid, lam
    return int(best_cid)


def predict(model: Model, x, scale_mode: str = "uniform") -> Prediction:
    """Classify one normalized sample."""
    _check_mode(scale_mode)
    if not model.classes:
        raise StateError("model has no trained classes")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != model.dim:
        raise DimensionError(f"expected a vector of dimension {model.dim}, got shape {x.shape}")

    scores: list[tuple[int, float]] = []
    best_j: dict[int, int] = {}
    for cid in model.class_ids:
        lam, j = _local_best(model.classes[cid], x, scale_mode)
        scores.append((cid, lam))
        best_j[cid] = j

    label = global_decision(scores)
    lam_win = dict(scores)[label]
    return Prediction(
        label=label,
        per_class_scores=tuple(scores),
        winning_cloud=best_j[label],
        winning_similarity=lam_win,
    )


def predict_batch(model: Model, xs, scale_mode: str = "uniform") -> list[Prediction]:
    """Element-wise predict, order preserved."""
    _check_mode(scale_mode)
    arr = np.asarray(xs, dtype=np.float64)
    if arr.size == 0:
        return []
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D batch, got ndim={arr.ndim}")
    return [predict(model, row, scale_mode) for row in arr]


def format_predictions(model: Model, predictions, sample_refs=None,
                       delimiter: str = "\t") -> str:
    """Prediction table: id, label, every per-class score, winning prototype ref."""
    cids = model.class_ids
    header = ["sample_id", "predicted_class"] + [f"lambda_{c}" for c in cids] + ["winning_ref"]
    lines = [delimiter.join(header)]
    for i, pred in enumerate(predictions):
        ref = model.classes[pred.label].source_refs[pred.winning_cloud]
        sid = str(sample_refs[i]) if sample_refs is not None else str(i)
        by_cid = dict(pred.per_class_scores)
        row = [sid, str(pred.label)] + [repr(by_cid[c]) for c in cids] + [ref]
        lines.append(delimiter.join(row))
    return "\n".join(lines) + "\n"
