"""Classification metrics and permutation feature importance.

Precision/recall/F1 support binary (positive class 1), macro, and
weighted averaging; the default is weighted. AUC is computed by
trapezoidal integration of the ROC curve with equal scores grouped into
single threshold steps, and is cross-checked in tests against a
brute-force pairwise oracle.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .dataset import PARAM_DISPLAY

AVERAGING_MODES = ("binary_pos1", "macro", "weighted")


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    roc_auc: float
    accuracy: float
    tp: int
    fp: int
    tn: int
    fn: int
    averaging: str

    def as_dict(self):
        return {
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
            "roc_auc": self.roc_auc, "accuracy": self.accuracy,
            "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
            "averaging": self.averaging,
        }


def _prf(tp, fp, fn):
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def roc_auc(y_true, y_score) -> float:
    """AUC by trapezoidal integration over tie-grouped thresholds."""
    y_true = np.asarray(y_true)
    y_score = np.asarray(y_score, dtype=np.float64)
    n1 = int((y_true == 1).sum())
    n0 = int((y_true == 0).sum())
    if n1 == 0 or n0 == 0:
        raise ValueError("AUC requires both classes")
    order = np.argsort(-y_score, kind="stable")
    ys = y_true[order]
    ss = y_score[order]
    # one ROC vertex per distinct score value
    step_ends = np.nonzero(np.append(ss[1:] != ss[:-1], True))[0]
    ctp = np.cumsum(ys == 1)[step_ends]
    cfp = np.cumsum(ys == 0)[step_ends]
    tpr = np.concatenate([[0.0], ctp / n1])
    fpr = np.concatenate([[0.0], cfp / n0])
    return float(np.trapezoid(tpr, fpr))


def roc_auc_oracle(y_true, y_score) -> float:
    """Brute-force pairwise AUC: P(score_pos > score_neg) + 0.5 P(tie)."""
    y_true = np.asarray(y_true)
    y_score = np.asarray(y_score, dtype=np.float64)
    pos = y_score[y_true == 1]
    neg = y_score[y_true == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise ValueError("AUC requires both classes")
    diff = pos[:, None] - neg[None, :]
    wins = (diff > 0).sum() + 0.5 * (diff == 0).sum()
    return float(wins / (len(pos) * len(neg)))


def compute_metrics(y_true, y_pred, y_score, averaging: str = "weighted") -> MetricsReport:
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if averaging not in AVERAGING_MODES:
        raise ValueError(f"unknown averaging mode: {averaging}")
    if len(y_true) == 0 or len(y_true) != len(y_pred):
        raise ValueError("y_true and y_pred must be equal-length and non-empty")

    tp = int(((y_true == 1) & (y_pred == 1)).sum())
    fp = int(((y_true == 0) & (y_pred == 1)).sum())
    tn = int(((y_true == 0) & (y_pred == 0)).sum())
    fn = int(((y_true == 1) & (y_pred == 0)).sum())
    n = tp + fp + tn + fn
    acc = (tp + tn) / n

    p1, r1, f1_1 = _prf(tp, fp, fn)
    p0, r0, f1_0 = _prf(tn, fn, fp)  # class 0 as the positive class
    if averaging == "binary_pos1":
        p, r, f = p1, r1, f1_1
    elif averaging == "macro":
        p, r, f = (p0 + p1) / 2, (r0 + r1) / 2, (f1_0 + f1_1) / 2
    else:
        n1 = tp + fn
        n0 = tn + fp
        p = (n0 * p0 + n1 * p1) / n
        r = (n0 * r0 + n1 * r1) / n
        f = (n0 * f1_0 + n1 * f1_1) / n

    auc = roc_auc(y_true, np.asarray(y_score, dtype=np.float64))
    return MetricsReport(p, r, f, auc, acc, tp, fp, tn, fn, averaging)


@dataclass(frozen=True)
class ImportanceEntry:
    name: str
    mean: float
    std: float


@dataclass(frozen=True)
class ImportanceReport:
    entries: tuple  # sorted descending by mean

    def top(self, k: int):
        return self.entries[:k]

    def to_csv(self, path):
        with open(path, "w") as f:
            f.write("feature,mean,std\n")
            for e in self.entries:
                f.write(f"{e.name},{format(e.mean, '.17g')},{format(e.std, '.17g')}\n")

    def format_table(self, top_k: int = 15) -> str:
        rows = self.top(top_k)
        width = max((len(_display_name(e.name)) for e in rows), default=7)
        lines = [f"{'S. No.':<8}{'Feature':<{width + 2}}Mean score and standard deviation"]
        for i, e in enumerate(rows, 1):
            lines.append(f"{f'{i}.':<8}{_display_name(e.name):<{width + 2}}"
                         f"{e.mean:.3f} +/- {e.std:.3f}")
        return "\n".join(lines)


def _display_name(name: str) -> str:
    return PARAM_DISPLAY.get(name, name)


def _feature_rng(seed, name: str, repeat: int):
    # per-feature-name stream: importance is column-order independent
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    key = int.from_bytes(digest[:8], "big")
    return np.random.default_rng(np.random.SeedSequence([int(seed), key, int(repeat)]))


def _accuracy_metric(model, X, y, score_unused):
    return float((model.predict(X) == y).mean())


def permutation_importance(model, ds, metric: str = "accuracy", repeats: int = 10,
                           seed: int = 0) -> ImportanceReport:
    """Mean and std of the metric drop when each column is shuffled.

    Shuffling uses an RNG stream derived from the feature name, so reports
    are reproducible and independent of column order. The input dataset is
    never mutated.
    """
    X = ds.X
    y = ds.labels
    if y is None or len(y) == 0:
        raise ValueError("need a non-empty labeled dataset")
    if tuple(ds.feature_order) != tuple(model.feature_order):
        raise ValueError("dataset feature order does not match the model")

    if metric == "accuracy":
        def evaluate(Xe):
            return float((model.predict(Xe) == y).mean())
    elif metric == "roc_auc":
        def evaluate(Xe):
            return roc_auc(y, model.score(Xe))
    else:
        raise ValueError(f"unknown metric: {metric}")

    baseline = evaluate(X)
    entries = []
    for j, name in enumerate(ds.feature_order):
        drops = np.empty(repeats)
        for rep in range(repeats):
            rng = _feature_rng(seed, name, rep)
            Xp = X.copy()
            Xp[:, j] = Xp[rng.permutation(len(y)), j]
            drops[rep] = baseline - evaluate(Xp)
        entries.append(ImportanceEntry(name, float(drops.mean()), float(drops.std())))
    entries.sort(key=lambda e: (-e.mean, e.name))
    return ImportanceReport(tuple(entries))


def format_metrics_table(reports: dict) -> str:
    """Aligned text table: one row per model in the given order."""
    name_w = max(len(k) for k in reports) + 2
    lines = [f"{'Classification Model':<{name_w}}{'P':>7}{'R':>7}{'F1':>7}{'AUC':>7}{'Acc.':>7}"]
    for name, rep in reports.items():
        lines.append(f"{name:<{name_w}}{rep.precision:>7.2f}{rep.recall:>7.2f}"
                     f"{rep.f1:>7.2f}{rep.roc_auc:>7.2f}{rep.accuracy:>7.2f}")
    return "\n".join(lines)
