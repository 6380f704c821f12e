"""Evaluation protocol: accuracy, repeated stratified splits, reports.

The evaluation runs ``repeats`` independent stratified random splits at the
configured train ratio (default 80/20).  Splitting is driven by numpy's
PCG64 generator seeded explicitly, so a (seed, dataset, config) triple fully
determines every split and every number in the report.  Reported training
time covers only the learning pass itself; feature I/O and normalization sit
outside the clock.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import feature_space, inference, learner, megaclouds
from .errors import DataError, StateError
from .model_io import Dataset

RNG_ALGORITHM = "numpy PCG64 (np.random.default_rng)"


def accuracy(predictions, truth) -> float:
    """Fraction of samples whose predicted label equals the true one."""
    pred = np.asarray(predictions)
    true = np.asarray(truth)
    if pred.shape != true.shape:
        raise StateError(f"length mismatch: {pred.shape} vs {true.shape}")
    if pred.size == 0:
        raise StateError("accuracy of an empty prediction set is undefined")
    return float(np.mean(pred == true))


def confusion_matrix(predictions, truth, n_classes: int) -> np.ndarray:
    """counts[i, j] = samples of true class i predicted as class j."""
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    for p, t in zip(np.asarray(predictions), np.asarray(truth)):
        counts[int(t), int(p)] += 1
    return counts


@dataclass
class EvalReport:
    """Aggregate of one repeated-split evaluation run."""

    split_accuracies: list[float]
    accuracy_mean: float
    accuracy_std: float
    train_seconds: list[float]
    prototype_counts: list[int]
    megacloud_counts: list[int]
    confusion: np.ndarray
    label_names: list[str]
    seed: int
    repeats: int
    train_ratio: float
    rng_algorithm: str = RNG_ALGORITHM
    scale_mode: str = "uniform"
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "split_accuracies": self.split_accuracies,
            "accuracy_mean": self.accuracy_mean,
            "accuracy_std": self.accuracy_std,
            "train_seconds": self.train_seconds,
            "prototype_counts": self.prototype_counts,
            "megacloud_counts": self.megacloud_counts,
            "confusion": self.confusion.tolist(),
            "label_names": self.label_names,
            "seed": self.seed,
            "repeats": self.repeats,
            "train_ratio": self.train_ratio,
            "rng_algorithm": self.rng_algorithm,
            "scale_mode": self.scale_mode,
        }

    def render_text(self) -> str:
        lines = [
            f"{'split':>5}  {'accuracy':>9}  {'train_s':>8}  {'P':>5}  {'megaclouds':>10}",
        ]
        for k in range(len(self.split_accuracies)):
            lines.append(
                f"{k + 1:>5}  {self.split_accuracies[k]:>9.4f}  "
                f"{self.train_seconds[k]:>8.3f}  {self.prototype_counts[k]:>5}  "
                f"{self.megacloud_counts[k]:>10}"
            )
        lines.append(
            f"mean accuracy {self.accuracy_mean:.4f} +/- {self.accuracy_std:.4f} "
            f"over {self.repeats} stratified {self.train_ratio:.0%}/"
            f"{1 - self.train_ratio:.0%} splits (seed {self.seed}, {self.rng_algorithm})"
        )
        lines.append(f"total training time {sum(self.train_seconds):.3f}s")
        return "\n".join(lines)


def _check_class_counts(dataset: Dataset) -> list[int]:
    cids = sorted(set(int(c) for c in dataset.class_ids))
    if len(cids) < 2:
        raise DataError("evaluation needs at least 2 classes")
    for cid in cids:
        n = int(np.sum(dataset.class_ids == cid))
        if n < 2:
            name = dataset.label_names[cid] if cid < len(dataset.label_names) else str(cid)
            raise DataError(f"class {cid} ({name!r}) has {n} sample(s), need at least 2")
    return cids


def stratified_split(class_ids: np.ndarray, train_ratio: float,
                     rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Per-class random split preserving proportions within one sample."""
    train_parts, test_parts = [], []
    for cid in sorted(set(int(c) for c in class_ids)):
        idx = np.flatnonzero(class_ids == cid)
        perm = rng.permutation(idx)
        k = int(round(train_ratio * idx.size))
        k = min(max(k, 1), idx.size - 1)
        train_parts.append(perm[:k])
        test_parts.append(perm[k:])
    return np.concatenate(train_parts), np.concatenate(test_parts)


def train_pipeline(dataset: Dataset, config: learner.TrainingConfig | None = None,
                   with_megaclouds: bool = True) -> learner.Model:
    """Fit normalization on the dataset, train, and attach the trimmings."""
    dataset.validate()
    config = config or learner.TrainingConfig()
    X, params = feature_space.fit_transform(dataset.features.astype(np.float64))
    model = learner.train(
        zip(X, dataset.class_ids.tolist(), dataset.source_refs), config
    )
    model.params = params
    model.label_names = list(dataset.label_names)
    if with_megaclouds:
        graph = megaclouds.build_adjacency(model)
        model.megaclouds = megaclouds.merge_megaclouds(model, graph)
    return model


def evaluate(dataset: Dataset, config: learner.TrainingConfig | None = None,
             repeats: int = 10, train_ratio: float = 0.8, seed: int = 0,
             scale_mode: str = "uniform") -> EvalReport:
    """Repeated stratified-split evaluation; deterministic given the seed."""
    dataset.validate()
    if not 0.0 < train_ratio < 1.0:
        raise ValueError("train_ratio must lie strictly between 0 and 1")
    _check_class_counts(dataset)
    config = config or learner.TrainingConfig()
    rng = np.random.default_rng(seed)
    n_classes = len(dataset.label_names)

    raw = dataset.features.astype(np.float64)
    accs, times, protos, mcs = [], [], [], []
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)

    for _ in range(repeats):
        train_idx, test_idx = stratified_split(dataset.class_ids, train_ratio, rng)
        X_train, params = feature_space.fit_transform(raw[train_idx])
        X_test = feature_space.transform(raw[test_idx], params)
        triples = list(zip(
            X_train,
            dataset.class_ids[train_idx].tolist(),
            [dataset.source_refs[i] for i in train_idx],
        ))

        t0 = time.perf_counter()
        model = learner.train(triples, config)
        elapsed = time.perf_counter() - t0

        model.params = params
        model.label_names = list(dataset.label_names)
        graph = megaclouds.build_adjacency(model)
        model.megaclouds = megaclouds.merge_megaclouds(model, graph)

        preds = [p.label for p in inference.predict_batch(model, X_test, scale_mode)]
        true = dataset.class_ids[test_idx]
        accs.append(accuracy(preds, true))
        times.append(elapsed)
        protos.append(model.total_clouds)
        mcs.append(len(model.megaclouds))
        confusion += confusion_matrix(preds, true, n_classes)

    return EvalReport(
        split_accuracies=accs,
        accuracy_mean=float(np.mean(accs)),
        accuracy_std=float(np.std(accs)),
        train_seconds=times,
        prototype_counts=protos,
        megacloud_counts=mcs,
        confusion=confusion,
        label_names=list(dataset.label_names),
        seed=seed,
        repeats=repeats,
        train_ratio=train_ratio,
        scale_mode=scale_mode,
    )
