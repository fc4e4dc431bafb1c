"""Gaussian naive Bayes with log-space posteriors."""

from __future__ import annotations

import warnings

import numpy as np

from .base import BaseModel


class GaussianNB(BaseModel):
    kind = "gaussian_nb"

    def __init__(self, feature_order, log_priors, means, variances):
        super().__init__(feature_order)
        self.log_priors = np.asarray(log_priors, dtype=np.float64)
        self.means = np.asarray(means, dtype=np.float64)
        self.variances = np.asarray(variances, dtype=np.float64)

    def _log_joint(self, X):
        # (n, 2): log P(y=c) + sum_j log N(x_j; mu_cj, var_cj)
        out = np.empty((X.shape[0], 2))
        for c in range(2):
            mu, var = self.means[c], self.variances[c]
            ll = -0.5 * (np.log(2 * np.pi * var) + (X - mu) ** 2 / var)
            out[:, c] = self.log_priors[c] + ll.sum(axis=1)
        return out

    def _score(self, X):
        lj = self._log_joint(X)
        m = lj.max(axis=1, keepdims=True)
        p = np.exp(lj - m)
        return p[:, 1] / p.sum(axis=1)

    def to_dict(self):
        return {
            "log_priors": self.log_priors.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(doc["feature_order"], doc["log_priors"], doc["means"], doc["variances"])


def fit_gaussian_nb(spec, X, y, feature_order) -> GaussianNB:
    var_floor = spec.hyperparams["var_floor"]
    n = len(y)
    counts = np.array([(y == 0).sum(), (y == 1).sum()], dtype=np.float64)
    if counts.min() == 0:
        warnings.warn("single-class training set: naive Bayes degenerates to a constant")
        counts = np.maximum(counts, 1e-300)
    log_priors = np.log(counts / n)
    means = np.zeros((2, X.shape[1]))
    variances = np.full((2, X.shape[1]), var_floor)
    for c in range(2):
        Xc = X[y == c]
        if len(Xc):
            means[c] = Xc.mean(axis=0)
            variances[c] = np.maximum(Xc.var(axis=0), var_floor)
    return GaussianNB(feature_order, log_priors, means, variances)
