"""Uniform fit/predict/score interface over the ten classifier kinds."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# Table-style ordering, least to most complex
MODEL_KINDS = (
    "gaussian_nb",
    "logistic_regression",
    "svm_linear",
    "svm_poly",
    "svm_rbf",
    "decision_tree",
    "random_forest",
    "adaboost",
    "bagging",
    "mlp",
)

DEFAULT_HYPERPARAMS = {
    "gaussian_nb": {"var_floor": 1e-9},
    "logistic_regression": {"l2": None, "max_iter": 5000, "grad_tol": 1e-6},
    "svm_linear": {"C": 1.0, "tol": 1e-3, "max_passes": 10000},
    "svm_poly": {"C": 1.0, "tol": 1e-3, "max_passes": 10000, "degree": 3, "coef0": 0.0,
                 "gamma": None},
    "svm_rbf": {"C": 1.0, "tol": 1e-3, "max_passes": 10000, "gamma": None},
    "decision_tree": {},
    "random_forest": {"n_estimators": 50},
    "adaboost": {"n_estimators": 50},
    "bagging": {"n_estimators": 50, "bootstrap": 1},
    "mlp": {"hidden": 100, "epochs": 200, "batch_size": 32, "lr": 1e-3},
}


@dataclass(frozen=True)
class ModelSpec:
    """Classifier kind plus hyperparameters and RNG seed."""

    kind: str
    hyperparams: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind: {self.kind}")
        defaults = DEFAULT_HYPERPARAMS[self.kind]
        unknown = [k for k in self.hyperparams if k not in defaults]
        if unknown:
            raise ValueError(f"unknown hyperparameter(s) for {self.kind}: {', '.join(unknown)}")
        merged = dict(defaults)
        merged.update(self.hyperparams)
        object.__setattr__(self, "hyperparams", merged)


class BaseModel:
    """Shared prediction plumbing; subclasses implement _score(X)."""

    kind: str = ""

    def __init__(self, feature_order):
        self.feature_order = tuple(feature_order)

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != len(self.feature_order):
            raise ValueError(f"expected {len(self.feature_order)} features, got {X.shape[1]}")
        return X

    def score(self, X) -> np.ndarray:
        """Continuous scores in [0, 1]; score >= 0.5 iff predict == 1."""
        return self._score(self._check(X))

    def predict(self, X) -> np.ndarray:
        return (self.score(X) >= 0.5).astype(np.int64)

    def _score(self, X):  # pragma: no cover - abstract
        raise NotImplementedError

    def to_dict(self) -> dict:  # pragma: no cover - abstract
        raise NotImplementedError


def _as_xy(data):
    """Accept either a labeled Dataset or an (X, y) pair."""
    if isinstance(data, tuple):
        X, y = data
    else:
        if data.labels is None:
            raise ValueError("dataset has no labels; run binarize_labels first")
        X, y = data.X, data.labels
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.shape[0] == 0:
        raise ValueError("empty training set")
    if not np.isin(y, (0, 1)).all():
        raise ValueError("labels must be in {0, 1}")
    return X, y


def fit(spec: ModelSpec, train, feature_order=None):
    """Train one model of the requested kind. Deterministic given the seed."""
    from . import ensembles, logistic, mlp, naive_bayes, svm, tree

    X, y = _as_xy(train)
    if feature_order is None:
        feature_order = getattr(train, "feature_order", None) or \
            tuple(f"f{i}" for i in range(X.shape[1]))

    trainers = {
        "gaussian_nb": naive_bayes.fit_gaussian_nb,
        "logistic_regression": logistic.fit_logistic,
        "svm_linear": svm.fit_svm,
        "svm_poly": svm.fit_svm,
        "svm_rbf": svm.fit_svm,
        "decision_tree": tree.fit_decision_tree,
        "random_forest": ensembles.fit_random_forest,
        "adaboost": ensembles.fit_adaboost,
        "bagging": ensembles.fit_bagging,
        "mlp": mlp.fit_mlp,
    }
    return trainers[spec.kind](spec, X, y, tuple(feature_order))


def predict(model: BaseModel, data) -> np.ndarray:
    X = data.X if hasattr(data, "X") else data
    return model.predict(X)


def score(model: BaseModel, data) -> np.ndarray:
    X = data.X if hasattr(data, "X") else data
    return model.score(X)


def save_model(model: BaseModel, path):
    doc = model.to_dict()
    doc["kind"] = model.kind
    doc["feature_order"] = list(model.feature_order)
    Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n")


def load_model(path) -> BaseModel:
    from . import ensembles, logistic, mlp, naive_bayes, svm, tree

    doc = json.loads(Path(path).read_text())
    loaders = {
        "gaussian_nb": naive_bayes.GaussianNB,
        "logistic_regression": logistic.LogisticRegression,
        "svm_linear": svm.SVM,
        "svm_poly": svm.SVM,
        "svm_rbf": svm.SVM,
        "decision_tree": tree.DecisionTree,
        "random_forest": ensembles.RandomForest,
        "adaboost": ensembles.AdaBoost,
        "bagging": ensembles.Bagging,
        "mlp": mlp.MLP,
    }
    kind = doc.get("kind")
    if kind not in loaders:
        raise ValueError(f"unknown model kind in {path}: {kind}")
    return loaders[kind].from_dict(doc)
