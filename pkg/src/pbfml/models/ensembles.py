"""Bootstrap and boosting ensembles over CART trees.

Vote ties in even-count ensembles break toward class 1, matching the
median-tie rule used when labels are binarized.
"""

from __future__ import annotations

import numpy as np

from .base import BaseModel
from .tree import FlatTree, best_weighted_stump


class _VotingEnsemble(BaseModel):
    def __init__(self, feature_order, trees):
        super().__init__(feature_order)
        self.trees = list(trees)

    def _score(self, X):
        # fraction of trees voting class 1
        votes = np.zeros(X.shape[0])
        for t in self.trees:
            votes += (t.predict_p1(X) >= 0.5)
        return votes / len(self.trees)

    def to_dict(self):
        return {"trees": [t.to_nested() for t in self.trees]}

    @classmethod
    def from_dict(cls, doc):
        return cls(doc["feature_order"], [FlatTree.from_nested(d) for d in doc["trees"]])


class RandomForest(_VotingEnsemble):
    kind = "random_forest"


class Bagging(_VotingEnsemble):
    kind = "bagging"


def _grow_bagged(spec, X, y, n_estimators, mtry, bootstrap=True):
    n = len(y)
    rng = np.random.default_rng(spec.seed)
    trees = []
    for _ in range(n_estimators):
        tree_rng = np.random.default_rng(rng.integers(0, 2**63))
        idx = tree_rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        trees.append(FlatTree().grow(X[idx], y[idx], rng=tree_rng, mtry=mtry))
    return trees


def fit_random_forest(spec, X, y, feature_order) -> RandomForest:
    mtry = int(np.ceil(np.sqrt(X.shape[1])))
    trees = _grow_bagged(spec, X, y, spec.hyperparams["n_estimators"], mtry)
    return RandomForest(feature_order, trees)


def fit_bagging(spec, X, y, feature_order) -> Bagging:
    trees = _grow_bagged(spec, X, y, spec.hyperparams["n_estimators"], None,
                         bootstrap=bool(spec.hyperparams["bootstrap"]))
    return Bagging(feature_order, trees)


class AdaBoost(BaseModel):
    """SAMME over depth-1 stumps; score is the normalized weighted vote for 1."""

    kind = "adaboost"

    def __init__(self, feature_order, stumps, alphas, fallback_p1=None):
        super().__init__(feature_order)
        self.stumps = list(stumps)  # (feature, threshold, p1_left, p1_right)
        self.alphas = np.asarray(alphas, dtype=np.float64)
        self.fallback_p1 = fallback_p1

    def _stump_votes(self, X):
        votes = np.empty((len(self.stumps), X.shape[0]), dtype=np.float64)
        for t, (j, thr, p1l, p1r) in enumerate(self.stumps):
            if j < 0:
                votes[t] = float(p1l >= 0.5)
            else:
                p1 = np.where(X[:, j] <= thr, p1l, p1r)
                votes[t] = (p1 >= 0.5).astype(np.float64)
        return votes

    def _score(self, X):
        if not self.stumps:
            return np.full(X.shape[0], float(self.fallback_p1))
        votes = self._stump_votes(X)
        return (self.alphas @ votes) / self.alphas.sum()

    def to_dict(self):
        return {
            "stumps": [list(s) for s in self.stumps],
            "alphas": self.alphas.tolist(),
            "fallback_p1": self.fallback_p1,
        }

    @classmethod
    def from_dict(cls, doc):
        stumps = [(int(s[0]), float(s[1]), float(s[2]), float(s[3]))
                  for s in doc["stumps"]]
        return cls(doc["feature_order"], stumps, doc["alphas"], doc["fallback_p1"])


def fit_adaboost(spec, X, y, feature_order, weight_log=None) -> AdaBoost:
    if y.min() == y.max():
        raise ValueError("degenerate labels: boosting needs both classes")
    n = len(y)
    w = np.full(n, 1.0 / n)
    stumps, alphas = [], []
    for _ in range(spec.hyperparams["n_estimators"]):
        j, thr, p1l, p1r = best_weighted_stump(X, y, w)
        if j < 0:
            pred = np.full(n, float(p1l >= 0.5))
        else:
            pred = (np.where(X[:, j] <= thr, p1l, p1r) >= 0.5).astype(np.float64)
        err = float(w[pred != y].sum())
        if err >= 0.5:
            break
        alpha = np.log((1.0 - max(err, 1e-10)) / max(err, 1e-10))
        stumps.append((j, thr, p1l, p1r))
        alphas.append(alpha)
        if err == 0.0:
            break
        w = w * np.exp(alpha * (pred != y))
        w /= w.sum()
        if weight_log is not None:
            weight_log.append(float(w.sum()))
    if not stumps:
        return AdaBoost(feature_order, [], [], fallback_p1=float(y.mean()))
    return AdaBoost(feature_order, stumps, alphas)
