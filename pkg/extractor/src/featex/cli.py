"""Command line entry point: featex extract."""

from __future__ import annotations

import argparse
import logging
import sys

from .backbones import BACKBONES
from .errors import FeatexError
from .extract import extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="featex",
        description="Extract CNN embeddings from an image directory tree "
                    "(one subdirectory per class) into a binary feature file.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("extract", help="embed an image tree into a feature file")
    p.add_argument("--root", required=True, help="dataset root; one subdirectory per class")
    p.add_argument("--backbone", default="vgg16", choices=sorted(BACKBONES),
                   help="embedding backbone (default vgg16, 4096-dim)")
    p.add_argument("--layer", default=None,
                   help="layer to read (default: the backbone's published layer)")
    p.add_argument("--out", required=True, help="output feature file path")
    p.add_argument("--weights", default="pretrained", choices=["pretrained", "random"],
                   help="backbone weights; 'random' is seeded and offline-safe")
    p.add_argument("--batch-size", type=int, default=16)
    return parser


def cli_main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        manifest = extract(args.root, backbone=args.backbone, layer=args.layer,
                           out_path=args.out, weights=args.weights,
                           batch_size=args.batch_size)
    except FeatexError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    total = sum(manifest.images_per_class.values())
    print(f"embedded {total} images over {len(manifest.class_names)} classes "
          f"({manifest.backbone}/{manifest.layer}, dim {manifest.dim}) -> {args.out}")
    if manifest.skipped:
        print(f"skipped {len(manifest.skipped)} undecodable file(s); "
              f"see {args.out}.skipped.txt", file=sys.stderr)
    return 0


def main() -> None:
    sys.exit(cli_main())
