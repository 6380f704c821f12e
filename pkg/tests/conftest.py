import numpy as np
import pytest

from protoclass import ClassModel, Dataset, Model, RunningStats, TrainingConfig


def build_class(class_id, prototypes, supports=None, radii_sq=None, refs=None,
                stats_stream=None, config=None):
    """Assemble a ClassModel directly from arrays (bypasses training)."""
    protos = np.atleast_2d(np.asarray(prototypes, dtype=np.float64))
    n = protos.shape[0]
    config = config or TrainingConfig()
    stats = RunningStats()
    stream = protos if stats_stream is None else np.atleast_2d(
        np.asarray(stats_stream, dtype=np.float64))
    for row in stream:
        stats.update(row)
    return ClassModel.from_parts(
        class_id=class_id,
        prototypes=protos,
        supports=[1] * n if supports is None else supports,
        radii_sq=[config.initial_radius_sq] * n if radii_sq is None else radii_sq,
        source_refs=[f"c{class_id}_p{j}" for j in range(n)] if refs is None else refs,
        stats=stats,
        config=config,
    )


def build_model(class_protos, config=None, **kwargs):
    """Model from {class_id: prototype rows}; per-class kwargs via dicts."""
    config = config or TrainingConfig()
    classes = {}
    for cid in sorted(class_protos):
        per_class = {k: v[cid] for k, v in kwargs.items() if cid in v}
        classes[cid] = build_class(cid, class_protos[cid], config=config, **per_class)
    return Model(classes=classes, config=config)


def random_model(rng, n_classes=3, dim=2, max_protos=8, config=None):
    class_protos = {}
    radii = {}
    for cid in range(n_classes):
        p = int(rng.integers(1, max_protos + 1))
        class_protos[cid] = rng.uniform(0.0, 1.0, size=(p, dim))
        radii[cid] = rng.uniform(0.0, 0.36, size=p).tolist()
    return build_model(class_protos, config=config, radii_sq=radii)


def snapshot(cm):
    """Hashable view of a class model's full cloud state."""
    return (
        cm.n_clouds,
        tuple(int(v) for v in cm.supports),
        tuple(float(v) for v in cm.prototypes[:, 0]),
        tuple(float(v) for v in cm.radii_sq),
    )


def single_class_trace(xs, config=None):
    """Feed a 1-D stream through one ClassModel, recording every step."""
    config = config or TrainingConfig()
    cm = ClassModel.from_first_sample(np.array([xs[0]]), "s0", 0, config)
    trace = [snapshot(cm)]
    for i, x in enumerate(xs[1:], start=1):
        cm.learn(np.array([x]), f"s{i}")
        trace.append(snapshot(cm))
    return cm, trace


def make_blob_dataset(n_per_class=100, centers=((0.0, 0.0), (1.0, 0.0), (0.0, 1.0)),
                      sigma=0.1, seed=123):
    """Well-separated Gaussian blobs, one class per center."""
    rng = np.random.default_rng(seed)
    feats, labels, refs = [], [], []
    for cid, center in enumerate(centers):
        pts = rng.normal(loc=center, scale=sigma, size=(n_per_class, len(center)))
        feats.append(pts)
        labels.extend([cid] * n_per_class)
        refs.extend(f"blob{cid}_img{i}" for i in range(n_per_class))
    return Dataset(
        features=np.concatenate(feats).astype(np.float32),
        class_ids=np.array(labels),
        source_refs=refs,
        label_names=[f"blob{cid}" for cid in range(len(centers))],
    )


@pytest.fixture
def blob_dataset():
    return make_blob_dataset()
