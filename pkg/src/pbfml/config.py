"""Flat run configuration: one registry for every pipeline knob.

Config files are JSON objects with flat dotted keys. Every command echoes
the effective (defaults + file + flags) config into its output directory,
and re-running from that echo reproduces all artifacts bit-exactly.
"""

from __future__ import annotations

import json
from pathlib import Path

from .models import MODEL_KINDS

DEFAULTS = {
    "seed": 0,
    "imaging.clean_hot_pixels": True,
    "imaging.hot_pixel_window": 3,
    "imaging.equalize": False,
    "imaging.equalize_bins": 256,
    "imaging.filter": "none",            # none | median | wiener
    "imaging.median_window": 3,
    "imaging.wiener_window": 5,
    "imaging.resample_size": 64,
    "extract.workers": 1,
    "dataset.test_frac": 0.2,
    "dataset.scale_fit": "train_only",   # train_only | all
    "dataset.split": "row",              # row | coupon
    "eval.averaging": "weighted",        # binary_pos1 | macro | weighted
    "eval.importance_repeats": 10,
    "eval.importance_set": "test",       # train | test | all
    "eval.importance_metric": "accuracy",
    "eval.top_k": 15,
    "models.kinds": list(MODEL_KINDS),
    "synth.n_coupons": 117,
    "synth.layers_per_coupon": 27,
    "synth.image_size": 64,
    "synth.comet_rate": 2.0,
    "synth.dark_spot_rate": 1.5,
    "synth.streak_rate": 0.3,
    "synth.label_noise_std": 0.18,
    "synth.pf_min": 0.1,
    "synth.pf_max": 1.5,
}


def load_config(path=None, overrides=None) -> dict:
    cfg = dict(DEFAULTS)
    if path is not None:
        doc = json.loads(Path(path).read_text())
        unknown = [k for k in doc if k not in DEFAULTS]
        if unknown:
            raise ValueError(f"{path}: unknown config key(s): {', '.join(unknown)}")
        cfg.update(doc)
    if overrides:
        cfg.update({k: v for k, v in overrides.items() if v is not None})
    return cfg


def echo_config(cfg: dict, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n")
