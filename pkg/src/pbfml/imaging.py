"""Geometric calibration, cleaning and resampling of layer sensor images.

All images are grayscale with intensities normalized to [0, 1]. Every
operation here is a pure function: same inputs, same output, no shared
state, so per-layer processing can be parallelized freely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import ndimage


@dataclass(frozen=True)
class GrayImage:
    """2-D grid of intensities in [0, 1], row-major."""

    pixels: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError("image must be a non-empty 2-D array")
        if not np.isfinite(p).all():
            raise ValueError("image contains non-finite intensities")
        if p.min() < 0.0 or p.max() > 1.0:
            raise ValueError("intensities must lie in [0, 1]")
        object.__setattr__(self, "pixels", p)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class Homography:
    """3x3 projective map, normalized so m[2][2] == 1."""

    m: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError("homography must be 3x3")
        if abs(m[2, 2]) < 1e-12:
            raise ValueError("singular homography")
        m = m / m[2, 2]
        if abs(np.linalg.det(m)) <= 1e-12:
            raise ValueError("singular homography")
        object.__setattr__(self, "m", m)

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    def apply(self, pts: np.ndarray) -> np.ndarray:
        """Map (n, 2) points through the homography."""
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        hom = np.column_stack([pts, np.ones(len(pts))])
        out = hom @ self.m.T
        return out[:, :2] / out[:, 2:3]

    def inverse(self) -> "Homography":
        return Homography(np.linalg.inv(self.m))


@dataclass(frozen=True)
class RegionSpec:
    """Axis-aligned crop rectangle (x, y, w, h) for one coupon, in overhead coords."""

    coupon_id: str
    rect: tuple

    def __post_init__(self):
        x, y, w, h = (int(v) for v in self.rect)
        if w < 2 or h < 2:
            raise ValueError(f"region {self.coupon_id}: rect must be at least 2x2")
        object.__setattr__(self, "rect", (x, y, w, h))


def _normalize_points(pts):
    # Hartley conditioning: centroid to origin, mean distance sqrt(2)
    centroid = pts.mean(axis=0)
    d = np.sqrt(((pts - centroid) ** 2).sum(axis=1)).mean()
    if d < 1e-12:
        raise ValueError("degenerate calibration")
    s = np.sqrt(2.0) / d
    T = np.array([
        [s, 0.0, -s * centroid[0]],
        [0.0, s, -s * centroid[1]],
        [0.0, 0.0, 1.0],
    ])
    return (pts - centroid) * s, T


def estimate_homography(correspondences) -> Homography:
    """Estimate the camera-to-overhead homography by normalized DLT.

    `correspondences` is a sequence of (source point, destination point)
    pairs; at least 4 non-degenerate pairs are required.
    """
    src = np.array([np.asarray(c[0], dtype=np.float64) for c in correspondences])
    dst = np.array([np.asarray(c[1], dtype=np.float64) for c in correspondences])
    if len(src) < 4:
        raise ValueError("insufficient correspondences")

    src_n, Ts = _normalize_points(src)
    dst_n, Td = _normalize_points(dst)

    n = len(src_n)
    A = np.zeros((2 * n, 9))
    x, y = src_n[:, 0], src_n[:, 1]
    u, v = dst_n[:, 0], dst_n[:, 1]
    A[0::2, 0] = x
    A[0::2, 1] = y
    A[0::2, 2] = 1.0
    A[0::2, 6] = -u * x
    A[0::2, 7] = -u * y
    A[0::2, 8] = -u
    A[1::2, 3] = x
    A[1::2, 4] = y
    A[1::2, 5] = 1.0
    A[1::2, 6] = -v * x
    A[1::2, 7] = -v * y
    A[1::2, 8] = -v

    _, s, vt = np.linalg.svd(A)
    if s[7] < 1e-10 * max(s[0], 1e-300):
        raise ValueError("degenerate calibration")
    Hn = vt[-1].reshape(3, 3)
    H = np.linalg.inv(Td) @ Hn @ Ts
    if abs(H[2, 2]) < 1e-12:
        raise ValueError("degenerate calibration")
    return Homography(H)


def warp_to_overhead(img: GrayImage, h: Homography, out_w: int, out_h: int) -> GrayImage:
    """Resample the source through the inverse map with bilinear interpolation.

    Output pixels whose pre-image falls outside the source are 0.
    """
    hinv = h.inverse().m
    xs, ys = np.meshgrid(np.arange(out_w, dtype=np.float64),
                         np.arange(out_h, dtype=np.float64))
    denom = hinv[2, 0] * xs + hinv[2, 1] * ys + hinv[2, 2]
    sx = (hinv[0, 0] * xs + hinv[0, 1] * ys + hinv[0, 2]) / denom
    sy = (hinv[1, 0] * xs + hinv[1, 1] * ys + hinv[1, 2]) / denom

    p = img.pixels
    hgt, wid = p.shape
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    fx = sx - x0
    fy = sy - y0

    inside = (sx >= 0) & (sx <= wid - 1) & (sy >= 0) & (sy <= hgt - 1)
    x0c = np.clip(x0, 0, wid - 1)
    y0c = np.clip(y0, 0, hgt - 1)
    x1c = np.clip(x0 + 1, 0, wid - 1)
    y1c = np.clip(y0 + 1, 0, hgt - 1)

    top = p[y0c, x0c] * (1 - fx) + p[y0c, x1c] * fx
    bot = p[y1c, x0c] * (1 - fx) + p[y1c, x1c] * fx
    out = top * (1 - fy) + bot * fy
    out[~inside] = 0.0
    return GrayImage(np.clip(out, 0.0, 1.0))


def _check_window(k: int):
    if k % 2 == 0 or k < 3:
        raise ValueError("window size must be odd and >= 3")


def _window_stack(p: np.ndarray, k: int) -> np.ndarray:
    """(h, w, k*k) view of clamped (edge-replicated) k x k windows."""
    r = k // 2
    padded = np.pad(p, r, mode="edge")
    return sliding_window_view(padded, (k, k)).reshape(p.shape[0], p.shape[1], k * k)


def clean_hot_pixels(img: GrayImage, hot_mask=None, k: int = 3) -> GrayImage:
    """Replace hot pixels with the median of their k x k neighborhood.

    With an explicit mask only those pixels are replaced, and other masked
    pixels are excluded from the neighborhood. Without a mask, pixels whose
    deviation from the window median exceeds 6x the window MAD are flagged
    and replaced.
    """
    _check_window(k)
    p = img.pixels
    out = p.copy()
    h, w = p.shape
    r = k // 2

    if hot_mask is not None:
        mask = set((int(y), int(x)) for (y, x) in hot_mask)
        for (y, x) in mask:
            if not (0 <= y < h and 0 <= x < w):
                raise ValueError(f"hot pixel ({y}, {x}) outside image")
        for (y, x) in mask:
            vals = []
            for dy in range(-r, r + 1):
                for dx in range(-r, r + 1):
                    yy = min(max(y + dy, 0), h - 1)
                    xx = min(max(x + dx, 0), w - 1)
                    if (yy, xx) not in mask:
                        vals.append(p[yy, xx])
            if vals:
                out[y, x] = float(np.median(vals))
        return GrayImage(out)

    win = _window_stack(p, k)
    med = np.median(win, axis=2)
    mad = np.median(np.abs(win - med[:, :, None]), axis=2)
    flagged = np.abs(p - med) > 6.0 * mad
    out[flagged] = med[flagged]
    return GrayImage(out)


def median_filter(img: GrayImage, k: int) -> GrayImage:
    """k x k median filter with clamped (edge-replicated) borders."""
    _check_window(k)
    return GrayImage(ndimage.median_filter(img.pixels, size=k, mode="nearest"))


def wiener_deblur(img: GrayImage, k: int = 5, noise_var=None) -> GrayImage:
    """Adaptive Wiener filter from local window mean and variance.

    When `noise_var` is not given it is estimated as the mean of the local
    variances over the whole image.
    """
    _check_window(k)
    if noise_var is not None and noise_var < 0:
        raise ValueError("noise_var must be non-negative")
    p = img.pixels
    mu = ndimage.uniform_filter(p, size=k, mode="nearest")
    sq = ndimage.uniform_filter(p * p, size=k, mode="nearest")
    var = np.maximum(sq - mu * mu, 0.0)
    nv = float(var.mean()) if noise_var is None else float(noise_var)
    gain = np.maximum(var - nv, 0.0) / np.maximum(var, 1e-12)
    out = mu + gain * (p - mu)
    return GrayImage(np.clip(out, 0.0, 1.0))


def equalize_histogram(img: GrayImage, bins: int = 256) -> GrayImage:
    """Histogram equalization over `bins` quantization levels.

    A constant image maps to 0: its single occupied bin is also the
    smallest nonzero CDF value, so the numerator vanishes everywhere.
    """
    if bins < 2:
        raise ValueError("bins must be >= 2")
    p = img.pixels
    levels = np.rint(p * (bins - 1)).astype(np.int64)
    counts = np.bincount(levels.ravel(), minlength=bins)
    cdf = np.cumsum(counts) / levels.size
    cdf_min = cdf[np.nonzero(counts)[0][0]]
    if 1.0 - cdf_min < 1e-15:
        return GrayImage(np.zeros_like(p))
    mapped = (cdf[levels] - cdf_min) / (1.0 - cdf_min)
    return GrayImage(np.clip(mapped, 0.0, 1.0))


def crop_regions(img: GrayImage, regions) -> list:
    """Cut one pixel-exact sub-image per region; returns (coupon_id, image) pairs."""
    out = []
    for reg in regions:
        x, y, w, h = reg.rect
        if x < 0 or y < 0 or x + w > img.width or y + h > img.height:
            raise ValueError(f"region {reg.coupon_id}: rect {reg.rect} out of bounds "
                             f"for {img.width}x{img.height} image")
        out.append((reg.coupon_id, GrayImage(img.pixels[y:y + h, x:x + w].copy())))
    return out


def _lanczos_taps(n_in: int, n_out: int, a: int = 4):
    scale = n_in / n_out
    src = (np.arange(n_out) + 0.5) * scale - 0.5
    base = np.floor(src).astype(np.int64)
    offsets = np.arange(-a + 1, a + 1)
    taps = base[:, None] + offsets[None, :]
    x = src[:, None] - taps
    w = np.sinc(x) * np.sinc(x / a)
    w[np.abs(x) >= a] = 0.0
    w[np.abs(w) < 1e-12] = 0.0  # exact identity tap at integer offsets
    w = w / w.sum(axis=1, keepdims=True)
    return np.clip(taps, 0, n_in - 1), w


def resample_lanczos4(img: GrayImage, out_w: int = 64, out_h: int = 64) -> GrayImage:
    """Separable Lanczos resampling with a = 4 and center-aligned sampling.

    Tap weights are renormalized per output pixel, so constants are exact,
    and at scale 1 the kernel collapses to an identity tap. Edges clamp.
    """
    if out_w < 1 or out_h < 1:
        raise ValueError("output dimensions must be >= 1")
    p = img.pixels
    taps_x, w_x = _lanczos_taps(img.width, out_w)
    tmp = np.einsum("hot,ot->ho", p[:, taps_x], w_x)
    taps_y, w_y = _lanczos_taps(img.height, out_h)
    out = np.einsum("otw,ot->ow", tmp[taps_y, :], w_y)
    return GrayImage(np.clip(out, 0.0, 1.0))
