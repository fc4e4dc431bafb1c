"""Acceptance gate: ten end-to-end checks, one printed pass/fail line each.

Run with `pytest tests/test_acceptance.py -s` to see the lines as they
complete. The full-scale checks (1, 2, 10) share one session fixture and
together take about a minute.
"""

import json

import numpy as np
import pytest

from pbfml import models
from pbfml.cli import main as cli_main
from pbfml.dataset import (
    CouponRecord,
    ProcessingParams,
    assemble,
    binarize_labels,
    train_test_split,
)
from pbfml.evaluation import (
    compute_metrics,
    permutation_importance,
    roc_auc,
    roc_auc_oracle,
)
from pbfml.features import LayerFeatures
from pbfml.imaging import (
    GrayImage,
    clean_hot_pixels,
    estimate_homography,
    resample_lanczos4,
)
from pbfml.models.mlp import init_params, loss_and_grads
from pbfml.models.svm import fit_svm
from pbfml.models.tree import best_split


def _report(criterion: int, ok: bool, detail: str):
    print(f"[criterion {criterion:2d}] {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def test_01_ensembles_beat_linear_models(full_scale_run):
    acc = full_scale_run["accuracy"]
    ensembles = ("decision_tree", "random_forest", "adaboost", "bagging")
    linear = ("gaussian_nb", "logistic_regression", "svm_linear")
    worst_ensemble = min(acc[k] for k in ensembles)
    gap = max(acc[k] for k in ensembles) - max(acc[k] for k in linear)
    elapsed = full_scale_run["elapsed_s"]
    ok = worst_ensemble >= 0.80 and gap >= 0.05 and elapsed < 300
    _report(1, ok, f"worst ensemble acc {worst_ensemble:.3f} (need >= 0.80), "
                   f"ensemble-vs-linear gap {gap:.3f} (need >= 0.05), "
                   f"runtime {elapsed:.0f}s (need < 300s)")


def test_02_importance_recovers_planted_signal(full_scale_run):
    rep = permutation_importance(full_scale_run["models"]["bagging"],
                                 full_scale_run["test"], repeats=10, seed=0)
    top8 = [e.name for e in rep.top(8)]
    has_texture = any(n.endswith(("roughness", "std")) for n in top8)
    ok = "power_W" in top8 and "speed_mm_s" in top8 and has_texture
    _report(2, ok, f"top 8 of 35: {top8} (need laser power, laser speed and "
                   f"a roughness/std image feature)")


def test_03_auc_matches_pairwise_oracle():
    rng = np.random.default_rng(0)
    worst = 0.0
    checked = 0
    while checked < 200:
        n = int(rng.integers(4, 201))
        y = rng.integers(0, 2, n)
        if y.min() == y.max():
            continue
        s = np.round(rng.uniform(0, 1, n), 2)  # coarse scores force ties
        worst = max(worst, abs(roc_auc(y, s) - roc_auc_oracle(y, s)))
        checked += 1
    ok = worst <= 1e-12
    _report(3, ok, f"max |trapezoid - pairwise| over 200 instances = {worst:.2e} "
                   f"(need <= 1e-12)")


def test_04_metrics_hand_check():
    rep = compute_metrics([1, 1, 0, 0], [1, 0, 0, 0], [0.9, 0.4, 0.3, 0.2],
                          averaging="binary_pos1")
    hand = (rep.tp, rep.fn, rep.fp, rep.tn) == (1, 1, 0, 2) \
        and rep.precision == 1.0 and rep.recall == 0.5 \
        and rep.f1 == pytest.approx(2 / 3) and rep.accuracy == 0.75
    perfect = compute_metrics([0, 1, 1], [0, 1, 1], [0.1, 0.9, 0.8],
                              averaging="binary_pos1")
    all_one = (perfect.precision == perfect.recall == perfect.f1
               == perfect.accuracy == perfect.roc_auc == 1.0)
    ok = hand and all_one
    _report(4, ok, "confusion example (P=1, R=0.5, F1=2/3, Acc=0.75) and "
                   "perfect case (all 1.0) exact")


def test_05_mlp_gradient_check():
    rng = np.random.default_rng(1)
    eps = 1e-5
    worst = 0.0
    for _ in range(20):
        d = int(rng.integers(2, 5))
        hidden = int(rng.integers(2, 7))
        n = int(rng.integers(3, 9))
        X = rng.normal(0, 1, (n, d))
        y = rng.integers(0, 2, n).astype(np.float64)
        params = init_params(d, hidden, rng)
        _, grads = loss_and_grads(params, X, y)
        analytic, numeric = [], []
        for key in params:
            flat = params[key].ravel()
            for idx in range(flat.size):
                orig = flat[idx]
                flat[idx] = orig + eps
                lp = loss_and_grads(params, X, y)[0]
                flat[idx] = orig - eps
                lm = loss_and_grads(params, X, y)[0]
                flat[idx] = orig
                numeric.append((lp - lm) / (2 * eps))
            analytic.extend(np.asarray(grads[key]).ravel())
        a = np.asarray(analytic)
        g = np.asarray(numeric)
        worst = max(worst, float(np.linalg.norm(a - g)
                                 / max(np.linalg.norm(a) + np.linalg.norm(g), 1e-12)))
    ok = worst < 1e-4
    _report(5, ok, f"max relative gradient error over 20 networks = {worst:.2e} "
                   f"(need < 1e-4)")


def test_06_tree_split_matches_exhaustive_search():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 9))
        d = int(rng.integers(1, 4))
        X = np.round(rng.uniform(0, 1, (n, d)), 1)  # duplicates likely
        y = rng.integers(0, 2, n)
        got = best_split(X, y)

        def impurity(lab):
            if len(lab) == 0:
                return 0.0
            p = lab.mean()
            return 1.0 - p * p - (1.0 - p) ** 2

        parent = impurity(y)
        best_gain = 0.0
        for j in range(d):
            vals = np.unique(X[:, j])
            for a, b in zip(vals[:-1], vals[1:]):
                thr = 0.5 * (a + b)
                le = y[X[:, j] <= thr]
                ri = y[X[:, j] > thr]
                gain = parent - len(le) / n * impurity(le) \
                    - len(ri) / n * impurity(ri)
                best_gain = max(best_gain, gain)
        got_gain = 0.0 if got is None else got[2]
        worst = max(worst, abs(got_gain - best_gain))
    ok = worst <= 1e-12
    _report(6, ok, f"max |CART gain - exhaustive gain| over 100 datasets = "
                   f"{worst:.2e} (need <= 1e-12)")


def test_07_smo_satisfies_kkt():
    rng = np.random.default_rng(3)
    C, tol = 1.0, 1e-2
    violations = 0
    for trial in range(50):
        n = int(rng.integers(10, 31))
        sep = rng.uniform(1.5, 3.5)
        X = np.vstack([rng.normal(0, 1, (n // 2, 2)),
                       rng.normal(sep, 1, (n - n // 2, 2))])
        y = np.concatenate([np.zeros(n // 2, np.int64),
                            np.ones(n - n // 2, np.int64)])
        kind = ("svm_linear", "svm_rbf")[trial % 2]
        model = fit_svm(models.ModelSpec(kind, seed=trial), X, y,
                        tuple(f"f{i}" for i in range(2)))
        ysign = 2.0 * y - 1.0
        margin = ysign * model.decision(X)
        alpha = np.zeros(n)
        for sv, coef in zip(model.sv_x, model.sv_coef):
            i = int(np.where((X == sv).all(axis=1))[0][0])
            alpha[i] = coef * ysign[i]
        for i in range(n):
            if alpha[i] < 1e-6:
                bad = margin[i] < 1.0 - tol - 1e-9
            elif alpha[i] > C - 1e-6:
                bad = margin[i] > 1.0 + tol + 1e-9
            else:
                bad = abs(margin[i] - 1.0) > tol + 1e-9
            violations += bad
    ok = violations == 0
    _report(7, ok, f"{violations} KKT violations over 50 instances at "
                   f"tolerance 1e-2 (need 0)")


def test_08_imaging_analytics():
    rng = np.random.default_rng(4)
    # constant field survives resampling
    const = resample_lanczos4(GrayImage(np.full((17, 23), 0.37)), 11, 9)
    const_err = float(np.abs(const.pixels - 0.37).max())
    # scale 1 is the identity, bit for bit
    p = rng.uniform(0, 1, (15, 15))
    ident = np.array_equal(resample_lanczos4(GrayImage(p), 15, 15).pixels, p)
    # homography round-trip on noiseless synthetic correspondences
    H = np.array([[1.1, 0.02, 3.0], [-0.01, 0.95, -2.0], [1e-4, -2e-4, 1.0]])
    src = rng.uniform(0, 100, (12, 2))
    hom = np.column_stack([src, np.ones(12)]) @ H.T
    dst = hom[:, :2] / hom[:, 2:3]
    est = estimate_homography(list(zip(src, dst)))
    query = rng.uniform(0, 100, (50, 2))
    qh = np.column_stack([query, np.ones(50)]) @ H.T
    expected = qh[:, :2] / qh[:, 2:3]
    rt_err = float(np.abs(est.apply(query) - expected).max())
    # planted spike on a flat field is removed exactly
    flat = np.full((9, 9), 0.4)
    flat[4, 5] = 1.0
    cleaned = clean_hot_pixels(GrayImage(flat))
    spike_gone = np.array_equal(cleaned.pixels, np.full((9, 9), 0.4))
    ok = const_err <= 1e-9 and ident and rt_err <= 0.5 and spike_gone
    _report(8, ok, f"constant resample err {const_err:.1e} (<= 1e-9), "
                   f"scale-1 exact: {ident}, homography round-trip "
                   f"{rt_err:.2e} px (<= 0.5), spike removed: {spike_gone}")


def test_09_pipeline_determinism(tmp_path):
    cfg = {"synth.n_coupons": 8, "synth.layers_per_coupon": 3,
           "synth.image_size": 16, "imaging.resample_size": 16,
           "eval.importance_repeats": 3, "models.kinds": ["gaussian_nb", "bagging"]}

    def run(root):
        root.mkdir()
        cfg_path = root / "config_in.json"
        cfg_path.write_text(json.dumps(cfg))
        base = ["--config", str(cfg_path), "--out", str(root)]
        build = root / "build"
        assert cli_main(base + ["synth"]) == 0
        assert cli_main(base + ["extract", str(build),
                                str(build / "calibration.json")]) == 0
        assert cli_main(base + ["assemble", str(root / "features.csv"),
                                str(build / "coupons.json")]) == 0
        assert cli_main(base + ["train", str(root / "dataset.csv")]) == 0
        assert cli_main(base + ["importance", str(root / "models" / "bagging.json"),
                                str(root / "dataset.csv")]) == 0

    run(tmp_path / "a")
    run(tmp_path / "b")
    compared = ["features.csv", "dataset.csv", "metrics.json", "importance.csv",
                "models/gaussian_nb.json", "models/bagging.json",
                "build/coupons.json", "build/ground_truth.json"]
    differing = [f for f in compared
                 if (tmp_path / "a" / f).read_bytes() != (tmp_path / "b" / f).read_bytes()]
    ok = not differing
    _report(9, ok, f"two identical runs: {len(compared)} artifacts compared, "
                   f"differing: {differing or 'none'}")


def test_10_dataset_contracts(full_scale_run):
    # 50/50 +- 1 holds where the power factor values are continuous (all
    # distinct). In the full-scale build that is the coupon level: within a
    # coupon every layer row shares the coupon's value, so the median row
    # ties in whole-coupon blocks.
    full = full_scale_run["dataset"]
    coupon_pf = {cid: pf for cid, pf in zip(full.coupon_ids, full.power_factor)}
    cvals = np.array(list(coupon_pf.values()))
    c1 = int((cvals >= np.median(cvals)).sum())
    coupon_balance = abs(c1 - (len(cvals) - c1))

    # row-level check on 3157 distinct values, which also pins the
    # documented split sizes at N = 3157
    base = ProcessingParams(20.0, 400.0, 0.02, 0.1, 0.030)
    coupons = [CouponRecord(f"c{i:04d}", base, float(i)) for i in range(3157)]
    feats = {(c.coupon_id, 0): LayerFeatures.from_vector(np.full(30, 0.5))
             for c in coupons}
    ds, _ = binarize_labels(assemble(coupons, feats))
    n1 = int(ds.labels.sum())
    balance = max(abs(n1 - (len(ds) - n1)), coupon_balance)
    train, test = train_test_split(ds, 0.2, seed=0)

    scaled = full_scale_run["train"].X
    in_unit = float(scaled.min()) >= 0.0 and float(scaled.max()) <= 1.0

    ok = balance <= 1 and (len(train), len(test)) == (2526, 631) and in_unit
    _report(10, ok, f"label balance |n1-n0| = {balance} (<= 1), split sizes "
                    f"{len(train)}/{len(test)} (need 2526/631), scaled train "
                    f"features in [0,1]: {in_unit}")
