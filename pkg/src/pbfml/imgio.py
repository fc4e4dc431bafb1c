"""Grayscale image I/O (8/16-bit PNG and binary PGM) and calibration files.

Intensities are normalized to [0, 1] on load by dividing by the source
type maximum, so downstream features are independent of sensor bit depth.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from PIL import Image

from .imaging import GrayImage, RegionSpec


def load_image(path) -> GrayImage:
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return _load_pgm(path)
    with Image.open(path) as im:
        if im.mode in ("I;16", "I;16B", "I"):
            arr = np.asarray(im, dtype=np.float64)
            maxval = 65535.0
        elif im.mode == "L":
            arr = np.asarray(im, dtype=np.float64)
            maxval = 255.0
        else:
            arr = np.asarray(im.convert("L"), dtype=np.float64)
            maxval = 255.0
    return GrayImage(arr / maxval)


def save_image(img: GrayImage, path, bit_depth: int = 16):
    if bit_depth not in (8, 16):
        raise ValueError("bit_depth must be 8 or 16")
    path = Path(path)
    maxval = (1 << bit_depth) - 1
    q = np.rint(img.pixels * maxval)
    if path.suffix.lower() == ".pgm":
        _save_pgm(q, maxval, path)
        return
    if bit_depth == 8:
        Image.fromarray(q.astype(np.uint8), mode="L").save(path)
    else:
        Image.fromarray(q.astype(np.uint16)).save(path)


def _load_pgm(path: Path) -> GrayImage:
    data = path.read_bytes()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    # header: magic, width, height, maxval; '#' comments allowed
    tokens = []
    i = 2
    while len(tokens) < 3:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i:i + 1] != b"\n":
                i += 1
            continue
        start = i
        while i < len(data) and not data[i:i + 1].isspace():
            i += 1
        tokens.append(data[start:i])
    i += 1  # single whitespace after maxval
    width, height, maxval = (int(t) for t in tokens)
    if maxval <= 0 or maxval > 65535:
        raise ValueError(f"{path}: bad maxval {maxval}")
    dtype = np.dtype(">u2") if maxval > 255 else np.uint8
    count = width * height
    arr = np.frombuffer(data, dtype=dtype, count=count, offset=i)
    return GrayImage(arr.reshape(height, width).astype(np.float64) / maxval)


def _save_pgm(q: np.ndarray, maxval: int, path: Path):
    h, w = q.shape
    header = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
    if maxval > 255:
        body = q.astype(">u2").tobytes()
    else:
        body = q.astype(np.uint8).tobytes()
    path.write_bytes(header + body)


def load_calibration(path):
    """Read correspondences and crop regions from a calibration JSON file.

    Returns (correspondences, regions) where correspondences is a list of
    ((sx, sy), (dx, dy)) pairs and regions a list of RegionSpec.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ValueError(f"{path}: invalid JSON ({e})") from e
    if "correspondences" not in doc or "regions" not in doc:
        raise ValueError(f"{path}: missing 'correspondences' or 'regions'")
    corr = [(tuple(c["src"]), tuple(c["dst"])) for c in doc["correspondences"]]
    regions = [RegionSpec(str(r["coupon_id"]), tuple(r["rect"])) for r in doc["regions"]]
    return corr, regions


def save_calibration(correspondences, regions, path):
    doc = {
        "correspondences": [{"src": list(s), "dst": list(d)} for s, d in correspondences],
        "regions": [{"coupon_id": r.coupon_id, "rect": list(r.rect)} for r in regions],
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
