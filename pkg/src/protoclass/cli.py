"""Command line interface: train, predict, evaluate, rules, inspect."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import feature_space, harness, inference, learner, megaclouds, model_io
from .errors import ProtoclassError


def _add_radius_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--initial-radius", type=float, default=None, metavar="R",
        help="initial cloud radius r (stored squared); default sqrt(2 - 2cos 30deg) "
             "= 0.517638",
    )


def _config_from(args) -> learner.TrainingConfig:
    if args.initial_radius is None:
        return learner.TrainingConfig()
    return learner.TrainingConfig(initial_radius_sq=args.initial_radius ** 2)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="protoclass",
        description="Prototype-cloud classifier: single-pass training, "
                    "IF-THEN rules, winner-takes-all inference.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model from a feature file")
    p_train.add_argument("--features", required=True, help="feature file (.xdnf binary or .csv)")
    p_train.add_argument("--out", required=True, help="output model file (JSON)")
    _add_radius_flag(p_train)

    p_pred = sub.add_parser("predict", help="classify a feature file with a trained model")
    p_pred.add_argument("--model", required=True)
    p_pred.add_argument("--features", required=True)
    p_pred.add_argument("--out", default=None, help="prediction table path (default stdout)")
    p_pred.add_argument("--scale-mode", choices=inference.SCALE_MODES, default="uniform")

    p_eval = sub.add_parser(
        "evaluate",
        help="repeated stratified-split evaluation",
        description="Runs repeated stratified random splits and reports accuracy, "
                    "training time, and structure sizes. Splits are drawn from "
                    f"{harness.RNG_ALGORITHM} seeded with --seed, so reports are "
                    "fully reproducible.",
    )
    p_eval.add_argument("--features", required=True)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--repeats", type=int, default=10)
    p_eval.add_argument("--train-ratio", type=float, default=0.8)
    p_eval.add_argument("--scale-mode", choices=inference.SCALE_MODES, default="uniform")
    p_eval.add_argument("--out", default=None, help="write the machine-readable JSON report here")
    _add_radius_flag(p_eval)

    p_rules = sub.add_parser("rules", help="write the model's IF-THEN rules")
    p_rules.add_argument("--model", required=True)
    p_rules.add_argument("--out", required=True)

    p_insp = sub.add_parser("inspect", help="summarize a model's structure")
    p_insp.add_argument("--model", required=True)
    p_insp.add_argument("--viz-out", default=None, help="prototype table output path")
    p_insp.add_argument("--typicality-out", default=None,
                        help="per-class typicality profile output path")
    p_insp.add_argument("--grid-res", type=int, default=25,
                        help="resolution of the projection-plane grid for --typicality-out")

    return parser


def _cmd_train(args) -> int:
    dataset = model_io.read_features(args.features)
    model = harness.train_pipeline(dataset, _config_from(args))
    model_io.save_model(model, args.out)
    print(f"trained {model.total_clouds} clouds over {len(model.classes)} classes "
          f"-> {args.out}")
    return 0


def _cmd_predict(args) -> int:
    model = model_io.load_model(args.model)
    dataset = model_io.read_features(args.features)
    X = feature_space.transform(dataset.features.astype(np.float64), model.params)
    preds = inference.predict_batch(model, X, args.scale_mode)
    table = inference.format_predictions(model, preds, sample_refs=dataset.source_refs)
    if args.out:
        model_io.atomic_write_text(args.out, table)
        print(f"wrote {len(preds)} predictions -> {args.out}")
    else:
        sys.stdout.write(table)
    return 0


def _cmd_evaluate(args) -> int:
    dataset = model_io.read_features(args.features)
    report = harness.evaluate(
        dataset, _config_from(args), repeats=args.repeats,
        train_ratio=args.train_ratio, seed=args.seed, scale_mode=args.scale_mode,
    )
    print(report.render_text())
    if args.out:
        model_io.atomic_write_text(args.out, json.dumps(report.to_dict(), indent=1) + "\n")
        print(f"report -> {args.out}")
    return 0


def _cmd_rules(args) -> int:
    model = model_io.load_model(args.model)
    mcs = model.megaclouds
    if mcs is None:
        mcs = megaclouds.merge_megaclouds(model, megaclouds.build_adjacency(model))
    rules = megaclouds.generate_rules(model, mcs)
    megaclouds.write_rules(rules, args.out)
    print(f"wrote {len(rules)} rules -> {args.out}")
    return 0


def _radii_histogram(model: learner.Model, bins: int = 10) -> str:
    radii = np.sqrt(np.concatenate([model.classes[c].radii_sq for c in model.class_ids]))
    counts, edges = np.histogram(radii, bins=bins)
    width = max(counts.max(), 1)
    lines = ["radii histogram:"]
    for k in range(bins):
        bar = "#" * int(round(40 * counts[k] / width))
        lines.append(f"  [{edges[k]:.4f}, {edges[k + 1]:.4f}) {counts[k]:>5} {bar}")
    return "\n".join(lines)


def _cmd_inspect(args) -> int:
    model = model_io.load_model(args.model)
    mcs = model.megaclouds
    if mcs is None:
        mcs = megaclouds.merge_megaclouds(model, megaclouds.build_adjacency(model))
    print(f"classes: {len(model.classes)}   clouds: {model.total_clouds}   "
          f"megaclouds: {len(mcs)}   dim: {model.dim}")
    print(f"config fingerprint: {model.config_fingerprint}")
    for cid in model.class_ids:
        cm = model.classes[cid]
        n_mc = sum(1 for m in mcs if m.class_id == cid)
        print(f"  class {cid} ({model.label_of(cid)!r}): P={cm.n_clouds} "
              f"megaclouds={n_mc} samples={cm.sample_count} "
              f"max_support={int(cm.supports.max())}")
    print(_radii_histogram(model))
    if args.viz_out or args.typicality_out:
        grid = None
        if args.typicality_out:
            grid = megaclouds.build_projection_grid(model, args.grid_res)
        viz = megaclouds.export_viz(model, mcs, grid=grid)
        if args.viz_out:
            model_io.atomic_write_text(args.viz_out, viz.prototypes_table)
            print(f"prototype table -> {args.viz_out}")
        if args.typicality_out:
            model_io.atomic_write_text(args.typicality_out, viz.typicality_table)
            print(f"typicality profiles -> {args.typicality_out}")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "rules": _cmd_rules,
    "inspect": _cmd_inspect,
}


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    try:
        return _COMMANDS[args.command](args)
    except ProtoclassError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())
