"""Seeded synthetic build generator with planted ground truth.

A latent melt quality q is a deterministic function of the processing
parameters: a Gaussian response in volumetric energy density
E = P / (v * h * t), damped by defocus. q drives both the measured power
factor (monotonically, plus noise) and the layer image texture (lower q
means rougher texture and more injected phenomena), so both parameter
and image features carry label signal.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .dataset import (
    FOCUS_GRID_MM,
    HATCH_GRID_MM,
    LAYER_GRID_MM,
    POWER_GRID_W,
    SPEED_GRID_MM_S,
    CouponRecord,
    ProcessingParams,
    save_coupons_json,
)
from .imaging import GrayImage, RegionSpec
from .imgio import save_calibration, save_image

CHANNEL_NAMES = ("tomo", "ps_aop", "ps_dolp", "pm_aop", "pm_dolp")
_CHANNEL_INDEX = {c: i for i, c in enumerate(CHANNEL_NAMES)}
# post-melt channels see fewer phenomena than post-spread
_CHANNEL_RATE_FACTOR = {"tomo": 1.0, "ps_aop": 1.0, "ps_dolp": 1.0,
                        "pm_aop": 0.5, "pm_dolp": 0.5}

DEFOCUS_QUALITY_FACTOR = 0.6
FOCUSED_SPOT_MM = 0.030
DEFOCUSED_SPOT_MM = 0.257


@dataclass(frozen=True)
class SynthConfig:
    n_coupons: int = 117
    layers_per_coupon: int = 27
    image_size: int = 64
    seed: int = 0
    comet_rate: float = 2.0
    dark_spot_rate: float = 1.5
    streak_rate: float = 0.3
    label_noise_std: float = 0.18
    pf_min: float = 0.1
    pf_max: float = 1.5

    def __post_init__(self):
        if min(self.n_coupons, self.layers_per_coupon, self.image_size) < 1:
            raise ValueError("counts must be >= 1")
        if min(self.comet_rate, self.dark_spot_rate, self.streak_rate) < 0:
            raise ValueError("phenomenon rates must be >= 0")


def energy_density(p: ProcessingParams) -> float:
    """Volumetric energy density in J/mm^3."""
    return p.power_W / (p.speed_mm_s * p.hatch_mm * p.layer_mm)


def _grid_energy_stats():
    es = [pw / (v * h * t)
          for pw, v, h, t, _ in itertools.product(
              POWER_GRID_W, SPEED_GRID_MM_S, HATCH_GRID_MM, LAYER_GRID_MM,
              FOCUS_GRID_MM)]
    es = np.array(es)
    q1, q3 = np.percentile(es, [25, 75])
    return float(np.median(es)), float((q3 - q1) / 2.0)


E_STAR, SIGMA_E = _grid_energy_stats()


def sample_params(seed) -> ProcessingParams:
    """Uniform draw from the campaign's discrete parameter grids."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return ProcessingParams(
        power_W=float(rng.choice(POWER_GRID_W)),
        speed_mm_s=float(rng.choice(SPEED_GRID_MM_S)),
        hatch_mm=float(rng.choice(HATCH_GRID_MM)),
        layer_mm=float(rng.choice(LAYER_GRID_MM)),
        focus_mm=float(rng.choice(FOCUS_GRID_MM)),
    )


def melt_quality(p: ProcessingParams) -> float:
    """Planted latent quality: Gaussian in energy density, damped by defocus."""
    e = energy_density(p)
    q = float(np.exp(-((e - E_STAR) ** 2) / (2.0 * SIGMA_E ** 2)))
    if abs(p.focus_mm - DEFOCUSED_SPOT_MM) < 1e-9:
        q *= DEFOCUS_QUALITY_FACTOR
    return q


def synth_power_factor(q: float, noise_std: float, seed,
                       pf_min: float = 0.1, pf_max: float = 1.5) -> float:
    """Monotone map q -> power factor with additive Gaussian noise, clipped at 0."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    pf = pf_min + (pf_max - pf_min) * q
    if noise_std > 0:
        pf += rng.normal(0.0, noise_std)
    return max(pf, 0.0)


def _layer_rng(seed: int, coupon_index: int, layer_index: int, channel: str):
    return np.random.default_rng(np.random.SeedSequence(
        [int(seed), int(coupon_index), int(layer_index), _CHANNEL_INDEX[channel]]))


def _render(q, channel, rng, size, comet_rate, dark_spot_rate, streak_rate):
    base_std = 0.08 * (1.0 + (1.0 - q))
    img = rng.normal(0.5, base_std, size=(size, size))
    scale = (1.0 - q) * _CHANNEL_RATE_FACTOR[channel]
    events = []

    n_comets = rng.poisson(comet_rate * scale)
    for _ in range(n_comets):
        cy, cx = rng.integers(0, size, size=2)
        angle = rng.uniform(0, np.pi)
        length = rng.integers(4, 11)
        mag = rng.uniform(0.85, 1.0)
        for t in range(length):
            y = int(cy + t * np.sin(angle))
            x = int(cx + t * np.cos(angle))
            if 0 <= y < size and 0 <= x < size:
                img[y, x] = mag
        events.append({"type": "comet", "position": [int(cy), int(cx)],
                       "magnitude": float(mag)})

    n_spots = rng.poisson(dark_spot_rate * scale)
    for _ in range(n_spots):
        cy, cx = rng.integers(0, size, size=2)
        r = int(rng.integers(1, 4))
        mag = rng.uniform(0.02, 0.15)
        yy, xx = np.ogrid[:size, :size]
        img[(yy - cy) ** 2 + (xx - cx) ** 2 <= r * r] = mag
        events.append({"type": "dark_spot", "position": [int(cy), int(cx)],
                       "magnitude": float(mag)})

    n_streaks = rng.poisson(streak_rate * scale)
    for _ in range(n_streaks):
        row = int(rng.integers(0, size))
        mag = rng.uniform(0.05, 0.2)
        img[row, :] = mag
        events.append({"type": "streak", "position": [row, 0], "magnitude": float(mag)})

    return GrayImage(np.clip(img, 0.0, 1.0)), events


def render_layer(p: ProcessingParams, q: float, channel: str, layer_index: int,
                 seed: int, coupon_index: int = 0,
                 cfg: SynthConfig = SynthConfig()) -> GrayImage:
    """Deterministic layer image for one sensor channel."""
    if channel not in _CHANNEL_INDEX:
        raise ValueError(f"unknown channel: {channel}")
    rng = _layer_rng(seed, coupon_index, layer_index, channel)
    img, _ = _render(q, channel, rng, cfg.image_size, cfg.comet_rate,
                     cfg.dark_spot_rate, cfg.streak_rate)
    return img


@dataclass
class GroundTruth:
    quality: dict = field(default_factory=dict)        # coupon_id -> q
    energy: dict = field(default_factory=dict)         # coupon_id -> E
    phenomena: dict = field(default_factory=dict)      # coupon_id -> {layer: events}


def make_coupons(cfg: SynthConfig):
    """Sample coupon parameters, latent qualities and power factors."""
    param_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0]))
    coupons, truth = [], GroundTruth()
    for i in range(cfg.n_coupons):
        cid = f"c{i:03d}"
        params = sample_params(param_rng)
        q = melt_quality(params)
        pf_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1, i]))
        pf = synth_power_factor(q, cfg.label_noise_std, pf_rng, cfg.pf_min, cfg.pf_max)
        coupons.append(CouponRecord(cid, params, pf))
        truth.quality[cid] = q
        truth.energy[cid] = energy_density(params)
    return coupons, truth


def iter_layer_images(cfg: SynthConfig, coupons, truth: GroundTruth = None):
    """Yield (coupon, layer_index, {channel: GrayImage}) deterministically."""
    for i, coupon in enumerate(coupons):
        q = melt_quality(coupon.params)
        for layer in range(cfg.layers_per_coupon):
            channels = {}
            for ch in CHANNEL_NAMES:
                rng = _layer_rng(cfg.seed, i, layer, ch)
                img, events = _render(q, ch, rng, cfg.image_size, cfg.comet_rate,
                                      cfg.dark_spot_rate, cfg.streak_rate)
                channels[ch] = img
                if truth is not None and events:
                    truth.phenomena.setdefault(coupon.coupon_id, {}) \
                         .setdefault(str(layer), []).extend(events)
            yield coupon, layer, channels


def generate_build(cfg: SynthConfig, out_dir):
    """Write the full on-disk build: layer images, metadata, calibration, truth.

    Layout: <out>/<coupon_id>/layer_<k>/<channel>.png plus coupons.json,
    calibration.json and ground_truth.json at the top level.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    coupons, truth = make_coupons(cfg)

    for coupon, layer, channels in iter_layer_images(cfg, coupons, truth):
        layer_dir = out / coupon.coupon_id / f"layer_{layer:03d}"
        layer_dir.mkdir(parents=True, exist_ok=True)
        for ch, img in channels.items():
            save_image(img, layer_dir / f"{ch}.png", bit_depth=16)

    save_coupons_json(coupons, out / "coupons.json")

    s = cfg.image_size
    corners = [((0, 0), (0, 0)), ((s - 1, 0), (s - 1, 0)),
               ((0, s - 1), (0, s - 1)), ((s - 1, s - 1), (s - 1, s - 1))]
    regions = [RegionSpec(c.coupon_id, (0, 0, s, s)) for c in coupons]
    save_calibration(corners, regions, out / "calibration.json")

    doc = {
        "config": asdict(cfg),
        "energy_peak": E_STAR,
        "energy_sigma": SIGMA_E,
        "quality": truth.quality,
        "energy": truth.energy,
        "phenomena": truth.phenomena,
    }
    (out / "ground_truth.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return coupons, truth
