"""Layer-level dataset assembly: join, binarize, split, scale, persist.

One row per coupon-layer. Predictors are the 5 processing parameters
followed by the 30 in-situ features; processing parameters and the
measured power factor are replicated across all layers of a coupon.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import FEATURE_NAMES, LayerFeatures

PARAM_COLUMNS = ("power_W", "speed_mm_s", "hatch_mm", "layer_mm", "focus_mm")

# Report display names for the parameter predictors
PARAM_DISPLAY = {
    "power_W": "Power (W)",
    "speed_mm_s": "Speed (mm/s)",
    "hatch_mm": "Hatch (mm)",
    "layer_mm": "Layer (mm)",
    "focus_mm": "Laser Focus (mm)",
}

PREDICTOR_COLUMNS = PARAM_COLUMNS + FEATURE_NAMES

# Parameter value grids used for the build campaign (opt-in validation)
POWER_GRID_W = (10, 12, 13, 14, 16, 18, 19, 20, 22, 24, 25, 30)
SPEED_GRID_MM_S = (300, 350, 400, 450, 500, 700)
HATCH_GRID_MM = (0.01, 0.02, 0.025, 0.0375)
LAYER_GRID_MM = (0.1, 0.15)
FOCUS_GRID_MM = (0.030, 0.257)


@dataclass(frozen=True)
class ProcessingParams:
    """Per-coupon laser settings; constant for every layer of the coupon."""

    power_W: float
    speed_mm_s: float
    hatch_mm: float
    layer_mm: float
    focus_mm: float

    def __post_init__(self):
        for name in PARAM_COLUMNS:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    def validate_grid(self):
        """Check each value against the campaign's discrete grid."""
        grids = {
            "power_W": POWER_GRID_W,
            "speed_mm_s": SPEED_GRID_MM_S,
            "hatch_mm": HATCH_GRID_MM,
            "layer_mm": LAYER_GRID_MM,
            "focus_mm": FOCUS_GRID_MM,
        }
        for name, grid in grids.items():
            v = getattr(self, name)
            if not any(abs(v - g) < 1e-9 for g in grid):
                raise ValueError(f"{name}={v} not in grid {grid}")

    def as_tuple(self):
        return tuple(getattr(self, n) for n in PARAM_COLUMNS)


@dataclass(frozen=True)
class CouponRecord:
    coupon_id: str
    params: ProcessingParams
    power_factor: float  # mW/(m K^2) at 77 C

    def __post_init__(self):
        if self.power_factor < 0:
            raise ValueError("power_factor must be >= 0")


@dataclass(frozen=True)
class SampleRow:
    coupon_id: str
    layer_index: int
    params: ProcessingParams
    features: LayerFeatures
    power_factor: float
    label: int | None


@dataclass
class Dataset:
    """Immutable-by-convention table of layer samples.

    X holds the predictors in PREDICTOR_COLUMNS order; labels is None
    until binarize_labels has run.
    """

    coupon_ids: list
    layer_indices: np.ndarray
    X: np.ndarray
    power_factor: np.ndarray
    labels: np.ndarray | None = None
    feature_order: tuple = field(default=PREDICTOR_COLUMNS)

    def __len__(self):
        return self.X.shape[0]

    def row(self, i: int) -> SampleRow:
        params = ProcessingParams(*self.X[i, :5])
        feats = LayerFeatures.from_vector(self.X[i, 5:])
        label = None if self.labels is None else int(self.labels[i])
        return SampleRow(self.coupon_ids[i], int(self.layer_indices[i]),
                         params, feats, float(self.power_factor[i]), label)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            coupon_ids=[self.coupon_ids[i] for i in idx],
            layer_indices=self.layer_indices[idx].copy(),
            X=self.X[idx].copy(),
            power_factor=self.power_factor[idx].copy(),
            labels=None if self.labels is None else self.labels[idx].copy(),
            feature_order=self.feature_order,
        )


def assemble(coupons, layer_feats) -> Dataset:
    """Join coupon records with per-layer features into one row per layer.

    `layer_feats` maps (coupon_id, layer_index) -> LayerFeatures. Layer
    counts may vary per coupon. Labels are left unset.
    """
    by_id = {c.coupon_id: c for c in coupons}
    orphans = sorted({cid for (cid, _) in layer_feats if cid not in by_id})
    if orphans:
        raise ValueError(f"layer features reference unknown coupon(s): {', '.join(orphans)}")

    keys = sorted(layer_feats.keys())
    n = len(keys)
    X = np.empty((n, len(PREDICTOR_COLUMNS)))
    pf = np.empty(n)
    coupon_ids = []
    layer_indices = np.empty(n, dtype=np.int64)
    for i, (cid, layer) in enumerate(keys):
        c = by_id[cid]
        coupon_ids.append(cid)
        layer_indices[i] = layer
        X[i, :5] = c.params.as_tuple()
        X[i, 5:] = layer_feats[(cid, layer)].as_vector()
        pf[i] = c.power_factor
    return Dataset(coupon_ids, layer_indices, X, pf)


def binarize_labels(ds: Dataset):
    """Median-split the continuous power factor into labels {0, 1}.

    Values below the median become 0, values at or above it become 1
    (ties at the median go to 1 by convention). Returns the labeled
    dataset and the median.
    """
    if len(ds) == 0:
        raise ValueError("cannot binarize an empty dataset")
    m = float(np.median(ds.power_factor))
    labels = (ds.power_factor >= m).astype(np.int64)
    if labels.min() == labels.max():
        warnings.warn("degenerate dataset: all labels identical after median split")
    out = Dataset(list(ds.coupon_ids), ds.layer_indices.copy(), ds.X.copy(),
                  ds.power_factor.copy(), labels, ds.feature_order)
    return out, m


def train_test_split(ds: Dataset, test_frac: float = 0.2, seed: int = 0):
    """Uniform random row-level partition into (train, test).

    No stratification and no coupon grouping: rows of the same coupon may
    land in both sets. |test| = round(test_frac * N).
    """
    n = len(ds)
    if n < 2:
        raise ValueError("need at least 2 rows to split")
    if not (0.0 < test_frac < 1.0):
        raise ValueError("test_frac must be in (0, 1)")
    n_test = int(np.floor(test_frac * n + 0.5))
    n_test = min(max(n_test, 1), n - 1)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    return ds.subset(np.sort(perm[n_test:])), ds.subset(np.sort(perm[:n_test]))


def train_test_split_by_coupon(ds: Dataset, test_frac: float = 0.2, seed: int = 0):
    """Partition whole coupons so no coupon spans both sets.

    Coupons are shuffled and assigned to the test set until its row count
    reaches round(test_frac * N).
    """
    n = len(ds)
    if n < 2:
        raise ValueError("need at least 2 rows to split")
    if not (0.0 < test_frac < 1.0):
        raise ValueError("test_frac must be in (0, 1)")
    rng = np.random.default_rng(seed)
    unique = sorted(set(ds.coupon_ids))
    if len(unique) < 2:
        raise ValueError("need at least 2 coupons for a coupon-level split")
    order = rng.permutation(len(unique))
    target = int(np.floor(test_frac * n + 0.5))
    test_coupons = set()
    count = 0
    for k in order:
        if count >= target and test_coupons:
            break
        test_coupons.add(unique[k])
        count += sum(1 for c in ds.coupon_ids if c == unique[k])
    if len(test_coupons) == len(unique):
        test_coupons.discard(unique[order[0]])
    is_test = np.array([c in test_coupons for c in ds.coupon_ids])
    return ds.subset(np.nonzero(~is_test)[0]), ds.subset(np.nonzero(is_test)[0])


@dataclass(frozen=True)
class Scaler:
    """Per-feature min-max affine map fitted on some reference set."""

    mins: np.ndarray
    maxs: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        span = self.maxs - self.mins
        out = np.zeros_like(X, dtype=np.float64)
        nz = span > 0
        out[:, nz] = (X[:, nz] - self.mins[nz]) / span[nz]
        return out


def minmax_scale(train: Dataset, test: Dataset, fit_on: str = "train_only"):
    """Scale predictors to [0, 1] by the fit set's min/max.

    Constant features map to 0. With fit_on="train_only" test values may
    fall outside [0, 1]; they are deliberately not clipped.
    """
    if len(train) == 0:
        raise ValueError("cannot fit scaler on empty train set")
    if fit_on not in ("train_only", "all"):
        raise ValueError(f"unknown fit_on mode: {fit_on}")
    ref = train.X if fit_on == "train_only" else np.vstack([train.X, test.X])
    scaler = Scaler(ref.min(axis=0), ref.max(axis=0))

    def apply(ds):
        return Dataset(list(ds.coupon_ids), ds.layer_indices.copy(),
                       scaler.transform(ds.X), ds.power_factor.copy(),
                       None if ds.labels is None else ds.labels.copy(),
                       ds.feature_order)

    return apply(train), apply(test), scaler


_CSV_PREFIX = ("coupon_id", "layer_index")
_CSV_SUFFIX = ("power_factor", "label")
CSV_COLUMNS = _CSV_PREFIX + PREDICTOR_COLUMNS + _CSV_SUFFIX


def _fmt(x: float) -> str:
    return format(x, ".17g")


def save_csv(ds: Dataset, path):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(CSV_COLUMNS)
        for i in range(len(ds)):
            label = "" if ds.labels is None else str(int(ds.labels[i]))
            w.writerow([ds.coupon_ids[i], int(ds.layer_indices[i])]
                       + [_fmt(v) for v in ds.X[i]]
                       + [_fmt(ds.power_factor[i]), label])


def load_csv(path) -> Dataset:
    """Read a dataset CSV; columns are realigned to canonical order by name."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        missing = [c for c in CSV_COLUMNS if c != "label" and c not in header]
        if missing:
            raise ValueError(f"{path}: missing column(s): {', '.join(missing)}")
        unknown = [c for c in header if c not in CSV_COLUMNS]
        if unknown:
            raise ValueError(f"{path}: unknown column(s): {', '.join(unknown)}")
        pos = {c: header.index(c) for c in header}
        has_label = "label" in pos

        coupon_ids, layers, rows, pfs, labels = [], [], [], [], []
        any_label = False
        for r, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise ValueError(f"{path}: row {r}: expected {len(header)} cells, got {len(rec)}")
            coupon_ids.append(rec[pos["coupon_id"]])
            try:
                layers.append(int(rec[pos["layer_index"]]))
                rows.append([float(rec[pos[c]]) for c in PREDICTOR_COLUMNS])
                pfs.append(float(rec[pos["power_factor"]]))
            except ValueError as e:
                raise ValueError(f"{path}: row {r}: non-numeric cell ({e})") from None
            if has_label and rec[pos["label"]] != "":
                labels.append(int(rec[pos["label"]]))
                any_label = True
            else:
                labels.append(-1)

    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(PREDICTOR_COLUMNS))
    lab = np.array(labels, dtype=np.int64) if any_label else None
    if lab is not None and (lab < 0).any():
        raise ValueError(f"{path}: some rows have labels and others do not")
    return Dataset(coupon_ids, np.array(layers, dtype=np.int64), X,
                   np.array(pfs, dtype=np.float64), lab)


def load_coupons_json(path) -> list:
    """Read coupon metadata: id, the five parameters, measured power factor."""
    doc = json.loads(Path(path).read_text())
    out = []
    for i, rec in enumerate(doc):
        try:
            params = ProcessingParams(**{k: float(rec[k]) for k in PARAM_COLUMNS})
            out.append(CouponRecord(str(rec["coupon_id"]), params, float(rec["power_factor"])))
        except KeyError as e:
            raise ValueError(f"{path}: coupon entry {i}: missing key {e}") from None
    return out


def save_coupons_json(coupons, path):
    doc = []
    for c in coupons:
        rec = {"coupon_id": c.coupon_id, "power_factor": c.power_factor}
        rec.update(dict(zip(PARAM_COLUMNS, c.params.as_tuple())))
        doc.append(rec)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
