"""File formats: binary feature datasets and the JSON model document.

Feature files (magic ``XDNF``) are little-endian binary:

    magic        4 bytes   b"XDNF"
    version      u16       currently 1
    n_samples    u64
    n_dims       u32
    label_count  u32
    label names  label_count x (u32 byte length + UTF-8 bytes)
    records      n_samples x (u32 class index,
                              u32 byte length + UTF-8 source ref,
                              n_dims float32 values)

Paths ending in ``.csv`` fall back to a text table with header row
``label,source_ref,f0..f{n-1}``; the label column carries label names.

Model files are human-inspectable JSON with a required ``format_version``
field.  All floats are written through their shortest round-trip decimal
representation, so a save/load cycle reproduces every value bit-exactly.
"""

from __future__ import annotations

import csv
import io
import json
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .density import RunningStats
from .errors import DataError, FormatError, StateError
from .feature_space import NormalizationParams
from .learner import ClassModel, Model, TrainingConfig
from .megaclouds import MegaCloud

FEATURE_MAGIC = b"XDNF"
FEATURE_VERSION = 1
MODEL_FORMAT_VERSION = 1


@dataclass
class Dataset:
    """An in-memory feature dataset; features stay float32 like on disk."""

    features: np.ndarray
    class_ids: np.ndarray
    source_refs: list[str]
    label_names: list[str]

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float32)
        self.class_ids = np.asarray(self.class_ids, dtype=np.int64)

    @property
    def n_samples(self) -> int:
        return int(self.features.shape[0])

    @property
    def n_dims(self) -> int:
        return int(self.features.shape[1])

    def validate(self) -> None:
        if self.features.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        if self.class_ids.shape != (self.n_samples,) or len(self.source_refs) != self.n_samples:
            raise DataError("features, class_ids and source_refs lengths disagree")
        if self.n_samples and (self.class_ids.min() < 0
                               or self.class_ids.max() >= len(self.label_names)):
            raise DataError("class index out of range of label_names")
        bad = ~np.isfinite(self.features)
        if bad.any():
            i = int(np.argwhere(bad.any(axis=1))[0][0])
            raise DataError(f"non-finite feature value in sample {i} ({self.source_refs[i]!r})")


def atomic_write_bytes(path, data: bytes) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


# -- feature files -----------------------------------------------------------


class _Cursor:
    """Byte reader that reports the offset of any truncation."""

    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError(
                f"truncated file while reading {what} at byte {self.pos}: "
                f"expected {n} bytes, {len(self.data) - self.pos} remain"
            )
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def u64(self, what: str) -> int:
        return struct.unpack("<Q", self.take(8, what))[0]

    def text(self, what: str) -> str:
        n = self.u32(what + " length")
        raw = self.take(n, what)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"invalid UTF-8 in {what} at byte {self.pos - n}") from exc


def _read_binary_features(path) -> Dataset:
    cur = _Cursor(Path(path).read_bytes())
    magic = cur.take(4, "magic")
    if magic != FEATURE_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {FEATURE_MAGIC!r}")
    version = cur.u16("version")
    if version != FEATURE_VERSION:
        raise FormatError(f"unsupported feature file version {version}")
    n_samples = cur.u64("n_samples")
    n_dims = cur.u32("n_dims")
    label_count = cur.u32("label_count")
    # each record needs at least 8 bytes of prefixes plus its float payload;
    # rejecting impossible headers up front keeps corrupt files from driving
    # a giant allocation
    min_needed = n_samples * (8 + 4 * n_dims)
    if min_needed > len(cur.data) - cur.pos:
        raise FormatError(
            f"declared n_samples={n_samples}, n_dims={n_dims} needs at least "
            f"{min_needed} bytes but only {len(cur.data) - cur.pos} follow the header"
        )
    label_names = [cur.text(f"label name {i}") for i in range(label_count)]

    features = np.empty((n_samples, n_dims), dtype=np.float32)
    class_ids = np.empty(n_samples, dtype=np.int64)
    refs: list[str] = []
    for i in range(n_samples):
        cid = cur.u32(f"class index of record {i}")
        if cid >= label_count:
            raise FormatError(f"record {i} has class index {cid} >= label_count {label_count}")
        class_ids[i] = cid
        refs.append(cur.text(f"source ref of record {i}"))
        raw = cur.take(4 * n_dims, f"feature values of record {i}")
        features[i] = np.frombuffer(raw, dtype="<f4", count=n_dims)
    if cur.pos != len(cur.data):
        raise FormatError(
            f"{len(cur.data) - cur.pos} trailing bytes after {n_samples} declared records"
        )
    ds = Dataset(features=features, class_ids=class_ids, source_refs=refs,
                 label_names=label_names)
    ds.validate()
    return ds


def _read_csv_features(path) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise FormatError("empty CSV feature file")
    header = rows[0]
    if len(header) < 2 or header[0] != "label" or header[1] != "source_ref":
        raise FormatError(f"CSV header must start with label,source_ref - got {header[:2]}")
    n_dims = len(header) - 2
    labels, refs, feats = [], [], []
    for i, row in enumerate(rows[1:]):
        if len(row) != n_dims + 2:
            raise FormatError(f"CSV row {i} has {len(row)} fields, expected {n_dims + 2}")
        labels.append(row[0])
        refs.append(row[1])
        try:
            feats.append([float(v) for v in row[2:]])
        except ValueError as exc:
            raise FormatError(f"CSV row {i} has a non-numeric feature value: {exc}") from exc
    label_names = sorted(set(labels))
    index = {name: k for k, name in enumerate(label_names)}
    features = np.asarray(feats, dtype=np.float32).reshape(len(feats), n_dims)
    ds = Dataset(
        features=features,
        class_ids=np.array([index[l] for l in labels], dtype=np.int64),
        source_refs=refs,
        label_names=label_names,
    )
    ds.validate()
    return ds


def read_features(path) -> Dataset:
    """Load a feature dataset; CSV fallback is picked by file extension."""
    if str(path).lower().endswith(".csv"):
        return _read_csv_features(path)
    return _read_binary_features(path)


def write_features(dataset: Dataset, path) -> None:
    """Write a dataset to the binary layout (or CSV when the path says so)."""
    dataset.validate()
    if str(path).lower().endswith(".csv"):
        _write_csv_features(dataset, path)
        return
    buf = io.BytesIO()
    buf.write(FEATURE_MAGIC)
    buf.write(struct.pack("<HQII", FEATURE_VERSION, dataset.n_samples,
                          dataset.n_dims, len(dataset.label_names)))
    for name in dataset.label_names:
        raw = name.encode("utf-8")
        buf.write(struct.pack("<I", len(raw)))
        buf.write(raw)
    for i in range(dataset.n_samples):
        buf.write(struct.pack("<I", int(dataset.class_ids[i])))
        raw = dataset.source_refs[i].encode("utf-8")
        buf.write(struct.pack("<I", len(raw)))
        buf.write(raw)
        buf.write(dataset.features[i].astype("<f4", copy=False).tobytes())
    atomic_write_bytes(path, buf.getvalue())


def _write_csv_features(dataset: Dataset, path) -> None:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(["label", "source_ref"] + [f"f{j}" for j in range(dataset.n_dims)])
    for i in range(dataset.n_samples):
        row = [dataset.label_names[int(dataset.class_ids[i])], dataset.source_refs[i]]
        row += [repr(float(v)) for v in dataset.features[i]]
        writer.writerow(row)
    atomic_write_text(path, out.getvalue())


# -- model files -------------------------------------------------------------


def _params_to_doc(params: NormalizationParams) -> dict:
    return {
        "mean": params.mean.tolist(),
        "std": params.std.tolist(),
        "min": params.min.tolist(),
        "max": params.max.tolist(),
    }


def _class_to_doc(cm: ClassModel) -> dict:
    return {
        "class_id": cm.class_id,
        "stats": {
            "mean": cm.stats.mean.tolist(),
            "mean_sq_norm": cm.stats.mean_sq_norm,
            "count": cm.stats.count,
        },
        "clouds": [
            {
                "prototype": cm.prototypes[j].tolist(),
                "support": int(cm.supports[j]),
                "radius_sq": float(cm.radii_sq[j]),
                "source_ref": cm.source_refs[j],
            }
            for j in range(cm.n_clouds)
        ],
    }


def save_model(model: Model, path) -> None:
    """Persist a trained model as versioned JSON (atomically)."""
    if not model.classes:
        raise StateError("refusing to save a model with no trained classes")
    doc = {
        "format_version": MODEL_FORMAT_VERSION,
        "config": {
            "initial_radius_sq": model.config.initial_radius_sq,
            "tie_break": model.config.tie_break,
        },
        "config_fingerprint": model.config_fingerprint,
        "normalization": None if model.params is None else _params_to_doc(model.params),
        "label_names": model.label_names,
        "classes": [_class_to_doc(model.classes[cid]) for cid in model.class_ids],
        "megaclouds": None if model.megaclouds is None else [
            {
                "id": mc.id,
                "class_id": mc.class_id,
                "member_cloud_ids": sorted(mc.member_cloud_ids),
                "representative_refs": list(mc.representative_refs),
            }
            for mc in model.megaclouds
        ],
    }
    atomic_write_text(path, json.dumps(doc, indent=1))


def _reject_constant(token: str):
    raise FormatError(f"non-finite numeric constant {token!r} in model file")


def load_model(path) -> Model:
    """Load a model document, checking version and numeric sanity."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise FormatError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise FormatError("model document must be a JSON object")
    version = doc.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise FormatError(f"unsupported model format_version {version!r}")
    try:
        config = TrainingConfig(
            initial_radius_sq=float(doc["config"]["initial_radius_sq"]),
            tie_break=str(doc["config"]["tie_break"]),
        )
        params = None
        if doc["normalization"] is not None:
            p = doc["normalization"]
            params = NormalizationParams(
                mean=np.asarray(p["mean"], dtype=np.float64),
                std=np.asarray(p["std"], dtype=np.float64),
                min=np.asarray(p["min"], dtype=np.float64),
                max=np.asarray(p["max"], dtype=np.float64),
            )
        classes: dict[int, ClassModel] = {}
        for cdoc in doc["classes"]:
            stats = RunningStats(
                mean=np.asarray(cdoc["stats"]["mean"], dtype=np.float64),
                mean_sq_norm=float(cdoc["stats"]["mean_sq_norm"]),
                count=int(cdoc["stats"]["count"]),
            )
            clouds = cdoc["clouds"]
            cm = ClassModel.from_parts(
                class_id=int(cdoc["class_id"]),
                prototypes=[c["prototype"] for c in clouds],
                supports=[int(c["support"]) for c in clouds],
                radii_sq=[float(c["radius_sq"]) for c in clouds],
                source_refs=[str(c["source_ref"]) for c in clouds],
                stats=stats,
                config=config,
            )
            classes[cm.class_id] = cm
        megaclouds = None
        if doc["megaclouds"] is not None:
            megaclouds = [
                MegaCloud(
                    id=int(m["id"]),
                    class_id=int(m["class_id"]),
                    member_cloud_ids=frozenset(int(g) for g in m["member_cloud_ids"]),
                    representative_refs=tuple(str(r) for r in m["representative_refs"]),
                )
                for m in doc["megaclouds"]
            ]
        label_names = doc.get("label_names")
        if label_names is not None:
            label_names = [str(n) for n in label_names]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"corrupt model document: {exc!r}") from exc

    model = Model(classes=classes, config=config, params=params,
                  label_names=label_names, megaclouds=megaclouds)
    if doc.get("config_fingerprint") != model.config_fingerprint:
        raise FormatError("config fingerprint does not match the stored configuration")
    return model
