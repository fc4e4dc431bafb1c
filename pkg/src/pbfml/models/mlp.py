"""One-hidden-layer perceptron: ReLU hidden units, sigmoid output,
cross-entropy loss, mini-batch gradient descent."""

from __future__ import annotations

import numpy as np

from .base import BaseModel
from .logistic import _sigmoid


def init_params(n_in, n_hidden, rng):
    """Xavier-uniform initialization."""
    lim1 = np.sqrt(6.0 / (n_in + n_hidden))
    lim2 = np.sqrt(6.0 / (n_hidden + 1))
    return {
        "W1": rng.uniform(-lim1, lim1, size=(n_in, n_hidden)),
        "b1": np.zeros(n_hidden),
        "W2": rng.uniform(-lim2, lim2, size=(n_hidden, 1)),
        "b2": np.zeros(1),
    }


def forward(params, X):
    z1 = X @ params["W1"] + params["b1"]
    a1 = np.maximum(z1, 0.0)
    z2 = (a1 @ params["W2"] + params["b2"]).ravel()
    return _sigmoid(z2), z1, a1


def loss_and_grads(params, X, y):
    """Mean binary cross-entropy and its gradients w.r.t. all parameters."""
    n = len(y)
    p, z1, a1 = forward(params, X)
    eps = 1e-12
    loss = float(-np.mean(y * np.log(p + eps) + (1.0 - y) * np.log(1.0 - p + eps)))
    dz2 = (p - y)[:, None] / n
    grads = {
        "W2": a1.T @ dz2,
        "b2": dz2.sum(axis=0),
    }
    da1 = dz2 @ params["W2"].T
    dz1 = da1 * (z1 > 0.0)
    grads["W1"] = X.T @ dz1
    grads["b1"] = dz1.sum(axis=0)
    return loss, grads


class MLP(BaseModel):
    kind = "mlp"

    def __init__(self, feature_order, params):
        super().__init__(feature_order)
        self.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}

    def _score(self, X):
        return forward(self.params, X)[0]

    def to_dict(self):
        return {"params": {k: v.tolist() for k, v in self.params.items()}}

    @classmethod
    def from_dict(cls, doc):
        return cls(doc["feature_order"], doc["params"])


def fit_mlp(spec, X, y, feature_order) -> MLP:
    hp = spec.hyperparams
    rng = np.random.default_rng(spec.seed)
    params = init_params(X.shape[1], hp["hidden"], rng)
    yf = y.astype(np.float64)
    n = len(yf)
    bs = hp["batch_size"]
    for _ in range(hp["epochs"]):
        order = rng.permutation(n)
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            _, grads = loss_and_grads(params, X[idx], yf[idx])
            for k in params:
                params[k] = params[k] - hp["lr"] * grads[k]
    return MLP(feature_order, params)
