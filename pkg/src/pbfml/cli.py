"""Command-line entry points: synth, extract, assemble, train, importance.

Each command is idempotent given identical inputs and seeds; every output
directory receives an echo of the effective config.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import config as config_mod
from . import dataset as ds_mod
from . import evaluation, models, pipeline, synth
from .imaging import estimate_homography
from .imgio import load_calibration, load_image
from .synth import CHANNEL_NAMES


def _synth_config(cfg) -> synth.SynthConfig:
    return synth.SynthConfig(
        n_coupons=cfg["synth.n_coupons"],
        layers_per_coupon=cfg["synth.layers_per_coupon"],
        image_size=cfg["synth.image_size"],
        seed=cfg["seed"],
        comet_rate=cfg["synth.comet_rate"],
        dark_spot_rate=cfg["synth.dark_spot_rate"],
        streak_rate=cfg["synth.streak_rate"],
        label_noise_std=cfg["synth.label_noise_std"],
        pf_min=cfg["synth.pf_min"],
        pf_max=cfg["synth.pf_max"],
    )


def cmd_synth(cfg, out_dir):
    out = Path(out_dir)
    config_mod.echo_config(cfg, out)
    build_dir = out / "build"
    synth.generate_build(_synth_config(cfg), build_dir)
    print(f"wrote synthetic build to {build_dir}")
    return 0


def _extract_one(task):
    cfg, cid, layer, layer_dir, h_m, rect = task
    from .imaging import Homography, RegionSpec

    h = Homography(h_m) if h_m is not None else None
    region = RegionSpec(cid, rect) if rect is not None else None
    channels = {}
    for ch in CHANNEL_NAMES:
        path = Path(layer_dir) / f"{ch}.png"
        if not path.exists():
            raise FileNotFoundError(f"missing channel image: {path}")
        channels[ch] = load_image(path)
    feats = pipeline.layer_features_from_channels(channels, cfg, h=h, region=region)
    return (cid, layer), feats


def cmd_extract(cfg, build_dir, calibration, out_dir):
    out = Path(out_dir)
    config_mod.echo_config(cfg, out)
    build = Path(build_dir)
    if not build.is_dir():
        raise FileNotFoundError(f"build directory not found: {build}")
    corr, regions = load_calibration(calibration)
    h = estimate_homography(corr)
    region_by_id = {r.coupon_id: r for r in regions}

    tasks = []
    for coupon_dir in sorted(d for d in build.iterdir() if d.is_dir()):
        cid = coupon_dir.name
        rect = region_by_id[cid].rect if cid in region_by_id else None
        for layer_dir in sorted(coupon_dir.glob("layer_*")):
            layer = int(layer_dir.name.split("_")[1])
            tasks.append((cfg, cid, layer, str(layer_dir), h.m, rect))
    if not tasks:
        raise ValueError(f"no layer directories found under {build}")

    workers = int(cfg.get("extract.workers", 1))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(_extract_one, tasks, chunksize=8))
    else:
        results = dict(map(_extract_one, tasks))

    features_csv = out / "features.csv"
    pipeline.save_features_csv(results, features_csv)
    print(f"extracted {len(results)} layers -> {features_csv}")
    return 0


def cmd_assemble(cfg, features_csv, coupons_json, out_dir):
    out = Path(out_dir)
    config_mod.echo_config(cfg, out)
    coupons = ds_mod.load_coupons_json(coupons_json)
    layer_feats = pipeline.load_features_csv(features_csv)
    ds = ds_mod.assemble(coupons, layer_feats)
    ds, median = ds_mod.binarize_labels(ds)
    dataset_csv = out / "dataset.csv"
    ds_mod.save_csv(ds, dataset_csv)
    n1 = int(ds.labels.sum())
    print(f"assembled {len(ds)} rows (median power factor {median:.6g}, "
          f"{len(ds) - n1} low / {n1} high) -> {dataset_csv}")
    return 0


def _split_and_scale(ds, cfg):
    if cfg["dataset.split"] == "coupon":
        train, test = ds_mod.train_test_split_by_coupon(
            ds, cfg["dataset.test_frac"], cfg["seed"])
    else:
        train, test = ds_mod.train_test_split(ds, cfg["dataset.test_frac"], cfg["seed"])
    fit_on = "train_only" if cfg["dataset.scale_fit"] == "train_only" else "all"
    return ds_mod.minmax_scale(train, test, fit_on)


def cmd_train(cfg, dataset_csv, out_dir):
    out = Path(out_dir)
    config_mod.echo_config(cfg, out)
    ds = ds_mod.load_csv(dataset_csv)
    if ds.labels is None:
        ds, _ = ds_mod.binarize_labels(ds)
    train, test, _scaler = _split_and_scale(ds, cfg)

    kinds = cfg["models.kinds"]
    unknown = [k for k in kinds if k not in models.MODEL_KINDS]
    if unknown:
        raise ValueError(f"unknown model kind(s): {', '.join(unknown)}")
    # keep canonical least-to-most-complex ordering regardless of flag order
    kinds = [k for k in models.MODEL_KINDS if k in kinds]

    model_dir = out / "models"
    model_dir.mkdir(parents=True, exist_ok=True)
    reports, all_metrics = {}, {}
    for kind in kinds:
        spec = models.ModelSpec(kind, seed=cfg["seed"])
        model = models.fit(spec, train)
        models.save_model(model, model_dir / f"{kind}.json")
        y_pred = model.predict(test.X)
        y_score = model.score(test.X)
        reports[kind] = evaluation.compute_metrics(
            test.labels, y_pred, y_score, cfg["eval.averaging"])
        all_metrics[kind] = {
            mode: evaluation.compute_metrics(test.labels, y_pred, y_score, mode).as_dict()
            for mode in evaluation.AVERAGING_MODES
        }

    (out / "metrics.json").write_text(json.dumps(all_metrics, indent=2, sort_keys=True) + "\n")
    table = evaluation.format_metrics_table(reports)
    (out / "metrics_table.txt").write_text(table + "\n")
    print(table)
    return 0


def cmd_importance(cfg, model_file, dataset_csv, out_dir):
    out = Path(out_dir)
    config_mod.echo_config(cfg, out)
    model = models.load_model(model_file)
    ds = ds_mod.load_csv(dataset_csv)
    if ds.labels is None:
        ds, _ = ds_mod.binarize_labels(ds)
    train, test, _scaler = _split_and_scale(ds, cfg)
    eval_set = {"train": train, "test": test}.get(cfg["eval.importance_set"])
    if eval_set is None:
        full, _ = ds_mod.binarize_labels(ds)
        scaled_train, scaled_test, _ = _split_and_scale(ds, cfg)
        # "all": evaluate on the concatenation of both scaled sets
        import numpy as np
        eval_set = ds_mod.Dataset(
            scaled_train.coupon_ids + scaled_test.coupon_ids,
            np.concatenate([scaled_train.layer_indices, scaled_test.layer_indices]),
            np.vstack([scaled_train.X, scaled_test.X]),
            np.concatenate([scaled_train.power_factor, scaled_test.power_factor]),
            np.concatenate([scaled_train.labels, scaled_test.labels]),
        )
    report = evaluation.permutation_importance(
        model, eval_set, metric=cfg["eval.importance_metric"],
        repeats=cfg["eval.importance_repeats"], seed=cfg["seed"])
    report.to_csv(out / "importance.csv")
    table = report.format_table(cfg["eval.top_k"])
    (out / "importance_table.txt").write_text(table + "\n")
    print(table)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pbfml",
                                description="Layer-wise power-factor prediction pipeline")
    p.add_argument("--config", help="JSON config file with flat dotted keys")
    p.add_argument("--seed", type=int, help="master RNG seed")
    p.add_argument("--out", required=True, help="output directory")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("synth", help="generate a synthetic build")

    pe = sub.add_parser("extract", help="extract per-layer features from a build")
    pe.add_argument("build_dir")
    pe.add_argument("calibration")

    pa = sub.add_parser("assemble", help="join features with coupon metadata")
    pa.add_argument("features_csv")
    pa.add_argument("coupons_json")

    pt = sub.add_parser("train", help="train models and report metrics")
    pt.add_argument("dataset_csv")
    pt.add_argument("--models", nargs="+", help="model kinds (default: all ten)")
    pt.add_argument("--scale-fit", choices=["train", "all"])
    pt.add_argument("--averaging", choices=["binary", "macro", "weighted"])
    pt.add_argument("--split", choices=["row", "coupon"])

    pi = sub.add_parser("importance", help="permutation feature importance")
    pi.add_argument("model_file")
    pi.add_argument("dataset_csv")
    pi.add_argument("--top-k", type=int)
    pi.add_argument("--scale-fit", choices=["train", "all"])
    pi.add_argument("--split", choices=["row", "coupon"])
    return p


_AVERAGING_FLAG = {"binary": "binary_pos1", "macro": "macro", "weighted": "weighted"}
_SCALE_FLAG = {"train": "train_only", "all": "all"}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {"seed": args.seed}
    if getattr(args, "models", None):
        overrides["models.kinds"] = args.models
    if getattr(args, "scale_fit", None):
        overrides["dataset.scale_fit"] = _SCALE_FLAG[args.scale_fit]
    if getattr(args, "averaging", None):
        overrides["eval.averaging"] = _AVERAGING_FLAG[args.averaging]
    if getattr(args, "split", None):
        overrides["dataset.split"] = args.split
    if getattr(args, "top_k", None):
        overrides["eval.top_k"] = args.top_k

    try:
        cfg = config_mod.load_config(args.config, overrides)
        if args.command == "synth":
            return cmd_synth(cfg, args.out)
        if args.command == "extract":
            return cmd_extract(cfg, args.build_dir, args.calibration, args.out)
        if args.command == "assemble":
            return cmd_assemble(cfg, args.features_csv, args.coupons_json, args.out)
        if args.command == "train":
            return cmd_train(cfg, args.dataset_csv, args.out)
        if args.command == "importance":
            return cmd_importance(cfg, args.model_file, args.dataset_csv, args.out)
        raise ValueError(f"unknown command: {args.command}")
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
