"""Single-pass, per-class prototype identification.

Each class trains independently on its own sample stream.  The first sample
seeds a single data cloud; every later sample first enters the class's
running statistics and then either

  * founds a new cloud, when its density falls on or outside the envelope
    spanned by the existing prototypes' densities (it is more central than
    all of them, or more peripheral), or
  * is absorbed by the nearest cloud, whose prototype moves to the running
    mean of its members and whose squared radius is re-averaged against the
    local spread estimate ``1 - ||p||^2`` (clamped at 0).

Training is non-iterative: every sample is touched exactly once, and classes
never interact, so per-class training can run in parallel.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .density import RunningStats, batch_density, density
from .errors import DimensionError, StateError
from .feature_space import ANGLE_30_CHORD_SQ, NormalizationParams

_TIE_BREAK_RULES = ("lowest_index",)


@dataclass
class TrainingConfig:
    """Knobs of the learning pass; the defaults are data-independent."""

    initial_radius_sq: float = ANGLE_30_CHORD_SQ
    tie_break: str = "lowest_index"

    def __post_init__(self):
        if not self.initial_radius_sq > 0.0:
            raise ValueError("initial_radius_sq must be positive")
        if self.tie_break not in _TIE_BREAK_RULES:
            raise ValueError(f"unsupported tie_break rule: {self.tie_break!r}")

    def fingerprint(self) -> str:
        blob = json.dumps(
            {"initial_radius_sq": self.initial_radius_sq, "tie_break": self.tie_break},
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class DataCloud:
    """Read-only view of one prototype and its bookkeeping."""

    prototype: np.ndarray
    support: int
    radius_sq: float
    source_ref: str
    class_id: int


class ClassModel:
    """All data clouds and running statistics of one class.

    Prototypes, supports and radii live in growable flat arrays so the hot
    per-sample operations (nearest search, density envelope) stay O(P * n)
    without re-stacking.
    """

    def __init__(self, class_id: int, dim: int, config: TrainingConfig):
        self.class_id = int(class_id)
        self.dim = int(dim)
        self.config = config
        self.stats = RunningStats()
        self._protos = np.empty((4, dim), dtype=np.float64)
        self._supports = np.zeros(4, dtype=np.int64)
        self._radii = np.zeros(4, dtype=np.float64)
        self._refs: list[str] = []
        self._p = 0

    @classmethod
    def from_first_sample(cls, x1, source_ref: str, class_id: int,
                          config: TrainingConfig | None = None) -> "ClassModel":
        """Initialize a class from its first sample: one cloud, seeded stats."""
        config = config or TrainingConfig()
        x1 = np.asarray(x1, dtype=np.float64)
        if x1.ndim != 1:
            raise DimensionError(f"expected a 1-D feature vector, got ndim={x1.ndim}")
        model = cls(class_id, x1.shape[0], config)
        model.stats.update(x1)
        model._append(x1, source_ref)
        return model

    @classmethod
    def from_parts(cls, class_id: int, prototypes, supports, radii_sq, source_refs,
                   stats: RunningStats, config: TrainingConfig) -> "ClassModel":
        """Rebuild a class from serialized pieces."""
        protos = np.asarray(prototypes, dtype=np.float64)
        if protos.ndim != 2 or protos.shape[0] == 0:
            raise StateError("a class model needs at least one prototype")
        model = cls(class_id, protos.shape[1], config)
        model.stats = stats
        n = protos.shape[0]
        model._protos = protos.copy()
        model._supports = np.asarray(supports, dtype=np.int64).copy()
        model._radii = np.asarray(radii_sq, dtype=np.float64).copy()
        model._refs = list(source_refs)
        if not (len(model._refs) == model._supports.shape[0] == model._radii.shape[0] == n):
            raise StateError("cloud field lengths disagree")
        model._p = n
        return model

    # -- structure accessors --------------------------------------------

    @property
    def n_clouds(self) -> int:
        return self._p

    @property
    def prototypes(self) -> np.ndarray:
        return self._protos[: self._p]

    @property
    def supports(self) -> np.ndarray:
        return self._supports[: self._p]

    @property
    def radii_sq(self) -> np.ndarray:
        return self._radii[: self._p]

    @property
    def source_refs(self) -> list[str]:
        return self._refs

    @property
    def sample_count(self) -> int:
        return self.stats.count

    def clouds(self) -> list[DataCloud]:
        return [
            DataCloud(
                prototype=self._protos[j].copy(),
                support=int(self._supports[j]),
                radius_sq=float(self._radii[j]),
                source_ref=self._refs[j],
                class_id=self.class_id,
            )
            for j in range(self._p)
        ]

    # -- learning steps --------------------------------------------------

    def _check_vector(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 1 or x.shape[0] != self.dim:
            raise DimensionError(f"expected a vector of dimension {self.dim}, got shape {x.shape}")
        return x

    def _append(self, x: np.ndarray, source_ref: str) -> None:
        if self._p == self._protos.shape[0]:
            cap = self._p * 2
            self._protos = np.concatenate(
                [self._protos, np.empty((cap - self._p, self.dim))], axis=0
            )
            self._supports = np.concatenate([self._supports, np.zeros(cap - self._p, np.int64)])
            self._radii = np.concatenate([self._radii, np.zeros(cap - self._p)])
        self._protos[self._p] = x
        self._supports[self._p] = 1
        self._radii[self._p] = self.config.initial_radius_sq
        self._refs.append(source_ref)
        self._p += 1

    def nearest_cloud(self, x) -> int:
        """Index of the prototype closest to x (ties go to the lowest index)."""
        if self._p == 0:
            raise StateError("class has no clouds yet")
        x = self._check_vector(x)
        diffs = self._protos[: self._p] - x
        d2 = (diffs * diffs).sum(axis=1)
        return int(np.argmin(d2))

    def should_add_cloud(self, x) -> bool:
        """True when x's density lies on or outside the prototypes' envelope.

        Assumes the running statistics already include x.
        """
        x = self._check_vector(x)
        d_x = density(self.stats, x)
        d_protos = batch_density(self.stats, self._protos[: self._p])
        return bool(d_x >= d_protos.max() or d_x <= d_protos.min())

    def add_cloud(self, x, source_ref: str) -> None:
        """Found a fresh cloud at x; existing clouds are untouched."""
        x = self._check_vector(x)
        self._append(x.copy(), source_ref)

    def update_cloud(self, j: int, x) -> None:
        """Absorb x into cloud j: recursive-mean prototype, re-averaged radius."""
        if not 0 <= j < self._p:
            raise StateError(f"cloud index {j} out of range (P={self._p})")
        x = self._check_vector(x)
        s = int(self._supports[j])
        a = s / (s + 1)
        b = 1.0 / (s + 1)
        self._protos[j] = a * self._protos[j] + b * x
        self._supports[j] = s + 1
        p = self._protos[j]
        p_sq = float(np.dot(p, p))
        r2 = (float(self._radii[j]) + (1.0 - p_sq)) / 2.0
        self._radii[j] = r2 if r2 > 0.0 else 0.0

    def learn(self, x, source_ref: str) -> "ClassModel":
        """Process one sample: stats first, then create-or-absorb."""
        x = self._check_vector(x)
        self.stats.update(x)
        if self.should_add_cloud(x):
            self.add_cloud(x, source_ref)
        else:
            self.update_cloud(self.nearest_cloud(x), x)
        return self


@dataclass
class Model:
    """A trained classifier: per-class clouds plus the frozen preprocessing."""

    classes: dict[int, ClassModel]
    config: TrainingConfig
    params: NormalizationParams | None = None
    label_names: list[str] | None = None
    megaclouds: list | None = field(default=None, repr=False)

    @property
    def class_ids(self) -> list[int]:
        return sorted(self.classes)

    @property
    def dim(self) -> int:
        if not self.classes:
            raise StateError("model has no trained classes")
        return next(iter(self.classes.values())).dim

    @property
    def total_clouds(self) -> int:
        return sum(cm.n_clouds for cm in self.classes.values())

    @property
    def config_fingerprint(self) -> str:
        return self.config.fingerprint()

    def all_clouds(self) -> list[DataCloud]:
        """Every cloud in deterministic global order (class asc, index asc)."""
        out: list[DataCloud] = []
        for cid in self.class_ids:
            out.extend(self.classes[cid].clouds())
        return out

    def label_of(self, class_id: int) -> str:
        if self.label_names is not None and 0 <= class_id < len(self.label_names):
            return self.label_names[class_id]
        return str(class_id)


def train(samples, config: TrainingConfig | None = None, on_sample=None) -> Model:
    """Run the single-pass learning procedure over an entire stream.

    ``samples`` yields ``(vector, class_id, source_ref)`` triples with vectors
    already normalized to [0, 1].  Classes are trained independently in
    stream order; ``on_sample(class_id)``, when given, is invoked once per
    processed sample (instrumentation hook).
    """
    config = config or TrainingConfig()
    models: dict[int, ClassModel] = {}
    n = 0
    for x, class_id, source_ref in samples:
        class_id = int(class_id)
        n += 1
        if class_id in models:
            models[class_id].learn(x, source_ref)
        else:
            models[class_id] = ClassModel.from_first_sample(x, source_ref, class_id, config)
        if on_sample is not None:
            on_sample(class_id)
    if n == 0:
        raise StateError("cannot train on an empty dataset")
    ordered = {cid: models[cid] for cid in sorted(models)}
    return Model(classes=ordered, config=config)
