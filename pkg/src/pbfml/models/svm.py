"""Soft-margin SVM trained by sequential minimal optimization (SMO).

Three kernels: linear, polynomial (gamma * x.y + coef0)^degree and RBF
exp(-gamma ||x - y||^2). Continuous scores come from a one-parameter
logistic calibration of the decision value fitted on the training set;
the calibration has no intercept so that score >= 0.5 exactly when the
decision value is >= 0.
"""

from __future__ import annotations

import numpy as np

from .base import BaseModel
from .logistic import _sigmoid

_ALPHA_EPS = 1e-8


def _resolve_gamma(spec, X):
    gamma = spec.hyperparams.get("gamma")
    if gamma is not None:
        return float(gamma)
    mv = float(X.var(axis=0).mean())
    if mv <= 0:
        return 1.0
    return 1.0 / (X.shape[1] * mv)


def _kernel_fn(kind, gamma, degree, coef0):
    if kind == "svm_linear":
        return lambda A, B: A @ B.T
    if kind == "svm_poly":
        return lambda A, B: (gamma * (A @ B.T) + coef0) ** degree
    if kind == "svm_rbf":
        def rbf(A, B):
            d2 = (np.sum(A * A, axis=1)[:, None] + np.sum(B * B, axis=1)[None, :]
                  - 2.0 * (A @ B.T))
            return np.exp(-gamma * np.maximum(d2, 0.0))
        return rbf
    raise ValueError(f"unknown SVM kind: {kind}")


class SVM(BaseModel):
    def __init__(self, kind, feature_order, sv_x, sv_coef, b, gamma, degree, coef0,
                 calib_a):
        super().__init__(feature_order)
        self.kind = kind
        self.sv_x = np.asarray(sv_x, dtype=np.float64)
        self.sv_coef = np.asarray(sv_coef, dtype=np.float64)  # alpha_i * y_i
        self.b = float(b)
        self.gamma = float(gamma)
        self.degree = int(degree)
        self.coef0 = float(coef0)
        self.calib_a = float(calib_a)
        self._kfn = _kernel_fn(self.kind, self.gamma, self.degree, self.coef0)

    def decision(self, X) -> np.ndarray:
        X = self._check(X)
        if len(self.sv_coef) == 0:
            return np.full(X.shape[0], self.b)
        return self._kfn(X, self.sv_x) @ self.sv_coef + self.b

    def _score(self, X):
        return _sigmoid(self.calib_a * self.decision(X))

    def predict(self, X):
        return (self.decision(self._check(X)) >= 0.0).astype(np.int64)

    def to_dict(self):
        return {
            "sv_x": self.sv_x.tolist(),
            "sv_coef": self.sv_coef.tolist(),
            "b": self.b,
            "gamma": self.gamma,
            "degree": self.degree,
            "coef0": self.coef0,
            "calib_a": self.calib_a,
        }

    @classmethod
    def from_dict(cls, doc):
        return cls(doc["kind"], doc["feature_order"], doc["sv_x"], doc["sv_coef"],
                   doc["b"], doc["gamma"], doc["degree"], doc["coef0"], doc["calib_a"])


def _smo(K, y, C, tol, max_passes, rng):
    """Platt's SMO on a precomputed kernel matrix; y in {-1, +1}.

    Returns (alpha, b) with decision f(x) = sum alpha_i y_i K_i(x) + b.
    """
    n = len(y)
    alpha = np.zeros(n)
    b = 0.0
    # error cache: E_i = f(x_i) - y_i
    E = -y.astype(np.float64)

    def take_step(i, j):
        nonlocal b
        if i == j:
            return False
        ai, aj = alpha[i], alpha[j]
        yi, yj = y[i], y[j]
        Ei, Ej = E[i], E[j]
        if yi != yj:
            L, H = max(0.0, aj - ai), min(C, C + aj - ai)
        else:
            L, H = max(0.0, ai + aj - C), min(C, ai + aj)
        if H - L < 1e-12:
            return False
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        if eta <= 1e-12:
            return False
        aj_new = aj + yj * (Ei - Ej) / eta
        aj_new = min(max(aj_new, L), H)
        if abs(aj_new - aj) < 1e-10 * (aj_new + aj + 1e-10):
            return False
        ai_new = ai + yi * yj * (aj - aj_new)

        b1 = b - Ei - yi * (ai_new - ai) * K[i, i] - yj * (aj_new - aj) * K[i, j]
        b2 = b - Ej - yi * (ai_new - ai) * K[i, j] - yj * (aj_new - aj) * K[j, j]
        if 0.0 < ai_new < C:
            b_new = b1
        elif 0.0 < aj_new < C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)

        E[:] = E + yi * (ai_new - ai) * K[i] + yj * (aj_new - aj) * K[j] + (b_new - b)
        alpha[i], alpha[j] = ai_new, aj_new
        b = b_new
        return True

    def examine(i):
        Ei = E[i]
        r = Ei * y[i]
        if (r < -tol and alpha[i] < C) or (r > tol and alpha[i] > 0):
            nb = np.where((alpha > _ALPHA_EPS) & (alpha < C - _ALPHA_EPS))[0]
            if len(nb) > 1:
                j = nb[np.argmax(np.abs(Ei - E[nb]))]
                if take_step(i, int(j)):
                    return True
            if len(nb):
                for j in rng.permutation(nb):
                    if take_step(i, int(j)):
                        return True
            for j in rng.permutation(n):
                if take_step(i, int(j)):
                    return True
        return False

    examine_all = True
    for _ in range(max_passes):
        changed = 0
        if examine_all:
            for i in range(n):
                changed += examine(i)
        else:
            for i in np.where((alpha > _ALPHA_EPS) & (alpha < C - _ALPHA_EPS))[0]:
                changed += examine(int(i))
        if examine_all:
            if changed == 0:
                break
            examine_all = False
        elif changed == 0:
            examine_all = True
    return alpha, b


def _fit_calibration(f, y):
    """Fit a > 0 in sigmoid(a * f) by Newton steps on the training log-loss."""
    m = 2.0 * y.astype(np.float64) - 1.0
    mf = m * f
    a = 1.0
    for _ in range(100):
        p = _sigmoid(-a * mf)  # 1 - sigmoid(a*mf)
        g = float(-(mf * p).mean())
        h = float((mf * mf * p * (1.0 - p)).mean())
        if h < 1e-12:
            break
        a_new = min(max(a - g / h, 1e-6), 1e4)
        if abs(a_new - a) < 1e-10:
            a = a_new
            break
        a = a_new
    return a


def fit_svm(spec, X, y, feature_order) -> SVM:
    if y.min() == y.max():
        raise ValueError("degenerate labels: SVM needs both classes")
    hp = spec.hyperparams
    C, tol, max_passes = hp["C"], hp["tol"], hp["max_passes"]
    degree = int(hp.get("degree", 3))
    coef0 = float(hp.get("coef0", 0.0))
    gamma = _resolve_gamma(spec, X) if spec.kind in ("svm_poly", "svm_rbf") else 1.0

    kfn = _kernel_fn(spec.kind, gamma, degree, coef0)
    K = kfn(X, X)
    ysign = 2.0 * y.astype(np.float64) - 1.0
    rng = np.random.default_rng(spec.seed)
    alpha, b = _smo(K, ysign, C, tol, max_passes, rng)

    sv = alpha > _ALPHA_EPS
    sv_x = X[sv]
    sv_coef = (alpha * ysign)[sv]
    model = SVM(spec.kind, feature_order, sv_x, sv_coef, b, gamma, degree, coef0, 1.0)
    model.calib_a = _fit_calibration(model.decision(X), y)
    return model
