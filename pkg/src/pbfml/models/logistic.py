"""L2-regularized logistic regression by full-batch gradient descent."""

from __future__ import annotations

import numpy as np

from .base import BaseModel


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _loss_grad(w, b, X, y, l2):
    z = X @ w + b
    # mean log(1 + exp(-m z)) with m = +/-1, computed stably
    m = 2.0 * y - 1.0
    mz = m * z
    loss = float(np.mean(np.logaddexp(0.0, -mz))) + 0.5 * l2 * float(w @ w)
    p = _sigmoid(z)
    r = p - y
    gw = X.T @ r / len(y) + l2 * w
    gb = float(r.mean())
    return loss, gw, gb


class LogisticRegression(BaseModel):
    kind = "logistic_regression"

    def __init__(self, feature_order, w, b):
        super().__init__(feature_order)
        self.w = np.asarray(w, dtype=np.float64)
        self.b = float(b)

    def _score(self, X):
        return _sigmoid(X @ self.w + self.b)

    def to_dict(self):
        return {"w": self.w.tolist(), "b": self.b}

    @classmethod
    def from_dict(cls, doc):
        return cls(doc["feature_order"], doc["w"], doc["b"])


def fit_logistic(spec, X, y, feature_order, loss_log=None) -> LogisticRegression:
    hp = spec.hyperparams
    l2 = hp["l2"] if hp["l2"] is not None else 1.0 / len(y)
    max_iter, grad_tol = hp["max_iter"], hp["grad_tol"]

    w = np.zeros(X.shape[1])
    b = 0.0
    yf = y.astype(np.float64)
    loss, gw, gb = _loss_grad(w, b, X, yf, l2)
    step = 1.0
    for _ in range(max_iter):
        gnorm = max(np.abs(gw).max(), abs(gb))
        if gnorm < grad_tol:
            break
        # backtracking line search (Armijo)
        gsq = float(gw @ gw) + gb * gb
        t = step
        for _ in range(60):
            w2 = w - t * gw
            b2 = b - t * gb
            loss2, gw2, gb2 = _loss_grad(w2, b2, X, yf, l2)
            if loss2 <= loss - 1e-4 * t * gsq:
                break
            t *= 0.5
        w, b, loss, gw, gb = w2, b2, loss2, gw2, gb2
        step = min(t * 2.0, 1e4)
        if loss_log is not None:
            loss_log.append(loss)
    return LogisticRegression(feature_order, w, b)
