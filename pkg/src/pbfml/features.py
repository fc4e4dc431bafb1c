"""Per-image intensity statistics and the 30-element per-layer feature vector.

"Roughness" here is Sa: the arithmetic mean absolute deviation of intensity
from the image mean. It is the standard areal surface-roughness parameter
and is distinct from the standard deviation, which is reported separately.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .imaging import GrayImage

STAT_NAMES = ("avg", "median", "max", "min", "std", "roughness")

# (attribute, display prefix); order fixed across the whole artifact
CHANNELS = (
    ("tomo", "Tomography"),
    ("ps_aop", "Polarimetry post spread AoP"),
    ("ps_dolp", "Polarimetry post spread DoLP"),
    ("pm_aop", "Polarimetry post melt AoP"),
    ("pm_dolp", "Polarimetry post melt DoLP"),
)

FEATURE_NAMES = tuple(f"{prefix} {stat}" for _, prefix in CHANNELS for stat in STAT_NAMES)


@dataclass(frozen=True)
class StatBlock:
    """The six intensity statistics of one processed region."""

    avg: float
    median: float
    max: float
    min: float
    std: float
    roughness: float

    def as_tuple(self):
        return tuple(getattr(self, f.name) for f in fields(self))


def region_stats(img: GrayImage) -> StatBlock:
    """Compute the six statistics over all pixels of the region.

    std is the population standard deviation; the median of an even pixel
    count is the mean of the two middle order statistics.
    """
    p = img.pixels.ravel()
    if p.size == 0:
        raise ValueError("empty image")
    avg = float(p.mean())
    return StatBlock(
        avg=avg,
        median=float(np.median(p)),
        max=float(p.max()),
        min=float(p.min()),
        std=float(p.std()),
        roughness=float(np.abs(p - avg).mean()),
    )


@dataclass(frozen=True)
class LayerFeatures:
    """All 30 in-situ statistics of one coupon-layer (5 channels x 6 stats)."""

    tomo: StatBlock
    ps_aop: StatBlock
    ps_dolp: StatBlock
    pm_aop: StatBlock
    pm_dolp: StatBlock

    def as_vector(self) -> np.ndarray:
        vals = []
        for attr, _ in CHANNELS:
            vals.extend(getattr(self, attr).as_tuple())
        return np.array(vals, dtype=np.float64)

    def as_dict(self) -> dict:
        return dict(zip(FEATURE_NAMES, self.as_vector()))

    @classmethod
    def from_vector(cls, vec) -> "LayerFeatures":
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (len(FEATURE_NAMES),):
            raise ValueError(f"expected {len(FEATURE_NAMES)} features, got {vec.shape}")
        blocks = {}
        for i, (attr, _) in enumerate(CHANNELS):
            blocks[attr] = StatBlock(*vec[6 * i:6 * i + 6])
        return cls(**blocks)


def build_layer_features(tomo=None, ps_aop=None, ps_dolp=None,
                         pm_aop=None, pm_dolp=None) -> LayerFeatures:
    """Apply region_stats to each of the five channels of one layer."""
    channels = {"tomo": tomo, "ps_aop": ps_aop, "ps_dolp": ps_dolp,
                "pm_aop": pm_aop, "pm_dolp": pm_dolp}
    missing = [name for name, img in channels.items() if img is None]
    if missing:
        raise ValueError(f"missing channel(s): {', '.join(missing)}")
    return LayerFeatures(**{name: region_stats(img) for name, img in channels.items()})
