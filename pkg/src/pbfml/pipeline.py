"""Wiring between imaging, features and dataset: per-layer processing chain.

The chain is clean -> (equalize) -> (filter) -> warp -> crop -> resample.
Which stages run, and their windows, come from the flat run config.
"""

from __future__ import annotations

import csv

from . import dataset as ds_mod
from . import imaging, synth
from .features import FEATURE_NAMES, LayerFeatures, build_layer_features


def process_channel(img, cfg, h=None, region=None, overhead_size=None):
    """Run one raw channel image through the configured processing chain."""
    if cfg.get("imaging.clean_hot_pixels", True):
        img = imaging.clean_hot_pixels(img, k=cfg.get("imaging.hot_pixel_window", 3))
    if cfg.get("imaging.equalize", False):
        img = imaging.equalize_histogram(img, bins=cfg.get("imaging.equalize_bins", 256))
    filt = cfg.get("imaging.filter", "none")
    if filt == "median":
        img = imaging.median_filter(img, cfg.get("imaging.median_window", 3))
    elif filt == "wiener":
        img = imaging.wiener_deblur(img, cfg.get("imaging.wiener_window", 5))
    elif filt != "none":
        raise ValueError(f"unknown imaging.filter: {filt}")
    if h is not None:
        out_h, out_w = overhead_size or (img.height, img.width)
        img = imaging.warp_to_overhead(img, h, out_w, out_h)
    if region is not None:
        (_, img), = imaging.crop_regions(img, [region])
    size = cfg.get("imaging.resample_size", 64)
    if (img.height, img.width) != (size, size):
        img = imaging.resample_lanczos4(img, size, size)
    return img


def layer_features_from_channels(channels, cfg, h=None, region=None):
    processed = {ch: process_channel(img, cfg, h=h, region=region)
                 for ch, img in channels.items()}
    return build_layer_features(**processed)


def synthetic_dataset(scfg: synth.SynthConfig, cfg=None):
    """Render a synthetic build in memory and extract its labeled dataset.

    Returns (dataset, median, coupons, ground_truth).
    """
    cfg = cfg or {}
    coupons, truth = synth.make_coupons(scfg)
    layer_feats = {}
    for coupon, layer, channels in synth.iter_layer_images(scfg, coupons):
        layer_feats[(coupon.coupon_id, layer)] = \
            layer_features_from_channels(channels, cfg)
    ds = ds_mod.assemble(coupons, layer_feats)
    ds, median = ds_mod.binarize_labels(ds)
    return ds, median, coupons, truth


FEATURES_CSV_COLUMNS = ("coupon_id", "layer_index") + FEATURE_NAMES


def save_features_csv(layer_feats, path):
    """Persist a (coupon_id, layer_index) -> LayerFeatures map."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(FEATURES_CSV_COLUMNS)
        for (cid, layer) in sorted(layer_feats):
            vec = layer_feats[(cid, layer)].as_vector()
            w.writerow([cid, layer] + [format(v, ".17g") for v in vec])


def load_features_csv(path):
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if tuple(header) != FEATURES_CSV_COLUMNS:
            missing = [c for c in FEATURES_CSV_COLUMNS if c not in header]
            if missing:
                raise ValueError(f"{path}: missing column(s): {', '.join(missing)}")
            pos = {c: header.index(c) for c in FEATURES_CSV_COLUMNS}
        else:
            pos = {c: i for i, c in enumerate(FEATURES_CSV_COLUMNS)}
        out = {}
        for r, rec in enumerate(reader, start=2):
            try:
                cid = rec[pos["coupon_id"]]
                layer = int(rec[pos["layer_index"]])
                vec = [float(rec[pos[c]]) for c in FEATURE_NAMES]
            except (ValueError, IndexError) as e:
                raise ValueError(f"{path}: row {r}: {e}") from None
            out[(cid, layer)] = LayerFeatures.from_vector(vec)
    return out
