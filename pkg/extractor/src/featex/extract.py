"""Walk an image tree (one subdirectory per class) into a feature file.

The output is the binary feature-file layout consumed by the classifier
package:

    magic        4 bytes   b"XDNF"
    version      u16       1
    n_samples    u64
    n_dims       u32
    label_count  u32
    label names  label_count x (u32 byte length + UTF-8 bytes)
    records      n_samples x (u32 class index,
                              u32 byte length + UTF-8 source ref,
                              n_dims float32 values)

everything little-endian.  Records carry raw (unstandardized) embeddings;
all dataset-level statistics belong to the classifier side so they can be
fitted on whatever training split it chooses.  Image order is lexicographic
by relative path, so re-running extraction over the same tree yields a
byte-identical file.
"""

from __future__ import annotations

import io
import json
import logging
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .backbones import get_backbone
from .errors import DataError

logger = logging.getLogger(__name__)

FEATURE_MAGIC = b"XDNF"
FEATURE_VERSION = 1


@dataclass
class ExtractionManifest:
    """What was extracted, from where, and how."""

    root: str
    class_names: list[str]
    backbone: str
    layer: str
    weights: str
    dim: int
    preprocessing: str
    images_per_class: dict[str, int]
    skipped: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=1, sort_keys=True) + "\n"


def _atomic_write(path: Path, data: bytes) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_feature_file(path, label_names, class_ids, source_refs, features) -> None:
    """Serialize records to the binary layout, atomically."""
    features = np.asarray(features, dtype=np.float32)
    n_samples, n_dims = features.shape
    buf = io.BytesIO()
    buf.write(FEATURE_MAGIC)
    buf.write(struct.pack("<HQII", FEATURE_VERSION, n_samples, n_dims, len(label_names)))
    for name in label_names:
        raw = name.encode("utf-8")
        buf.write(struct.pack("<I", len(raw)))
        buf.write(raw)
    for i in range(n_samples):
        buf.write(struct.pack("<I", int(class_ids[i])))
        raw = source_refs[i].encode("utf-8")
        buf.write(struct.pack("<I", len(raw)))
        buf.write(raw)
        buf.write(features[i].tobytes())
    _atomic_write(Path(path), buf.getvalue())


def _list_class_images(root: Path) -> tuple[list[str], list[tuple[str, int]]]:
    class_dirs = sorted((d for d in root.iterdir() if d.is_dir()), key=lambda d: d.name)
    if not class_dirs:
        raise DataError(f"{root} contains no class subdirectories")
    label_names = [d.name for d in class_dirs]
    entries = []
    for cid, d in enumerate(class_dirs):
        files = sorted(p for p in d.rglob("*") if p.is_file())
        if not files:
            raise DataError(f"class directory {d} contains no files")
        entries.extend((p.relative_to(root).as_posix(), cid) for p in files)
    return label_names, entries


def extract(root_dir, backbone: str = "vgg16", layer: str | None = None,
            out_path=None, weights: str = "pretrained",
            batch_size: int = 16) -> ExtractionManifest:
    """Embed every decodable image under ``root_dir`` and write the feature file.

    Undecodable files are skipped with a warning and listed in a sidecar
    report next to the output; a class whose directory yields no decodable
    image at all is an error.  Returns the manifest (also written as JSON
    next to the output file).
    """
    root = Path(root_dir)
    if not root.is_dir():
        raise DataError(f"{root} is not a directory")
    if out_path is None:
        raise DataError("out_path is required")
    out_path = Path(out_path)

    bb = get_backbone(backbone, layer=layer, weights=weights)
    label_names, entries = _list_class_images(root)

    refs: list[str] = []
    class_ids: list[int] = []
    chunks: list[np.ndarray] = []
    skipped: list[str] = []
    batch_imgs: list[Image.Image] = []

    def flush():
        if batch_imgs:
            chunks.append(bb.embed_batch(batch_imgs))
            for img in batch_imgs:
                img.close()
            batch_imgs.clear()

    for rel, cid in entries:
        try:
            img = Image.open(root / rel)
            img.load()
        except (UnidentifiedImageError, OSError) as exc:
            logger.warning("skipping undecodable image %s: %s", rel, exc)
            skipped.append(rel)
            continue
        refs.append(rel)
        class_ids.append(cid)
        batch_imgs.append(img)
        if len(batch_imgs) >= batch_size:
            flush()
    flush()

    counts = {name: 0 for name in label_names}
    for cid in class_ids:
        counts[label_names[cid]] += 1
    for name, n in counts.items():
        if n == 0:
            raise DataError(f"class directory {root / name} has no decodable image")

    features = np.concatenate(chunks) if chunks else np.empty((0, bb.dim), np.float32)
    if not np.isfinite(features).all():
        bad = int(np.argwhere(~np.isfinite(features).all(axis=1))[0][0])
        raise DataError(f"backbone produced a non-finite value for {refs[bad]!r}")

    write_feature_file(out_path, label_names, class_ids, refs, features)

    manifest = ExtractionManifest(
        root=str(root),
        class_names=label_names,
        backbone=bb.name,
        layer=bb.layer,
        weights=bb.weights,
        dim=bb.dim,
        preprocessing=bb.preprocessing,
        images_per_class=counts,
        skipped=skipped,
    )
    _atomic_write(out_path.with_name(out_path.name + ".manifest.json"),
                  manifest.to_json().encode("utf-8"))
    if skipped:
        report = "".join(line + "\n" for line in skipped)
        _atomic_write(out_path.with_name(out_path.name + ".skipped.txt"),
                      report.encode("utf-8"))
    return manifest
