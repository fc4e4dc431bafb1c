"""CART decision trees: Gini impurity, exhaustive threshold scan, no pruning.

Trees grow until a node is pure or has fewer than 2 samples (or no split
improves impurity). Thresholds are midpoints of consecutive distinct
sorted feature values. Leaf ties (p1 == 0.5) predict 1.
"""

from __future__ import annotations

import numpy as np

from .base import BaseModel


def gini(counts) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - (p * p).sum())


def best_split(X, y, feature_idx=None):
    """Best (feature, threshold, gain) by exhaustive scan, or None.

    Gain is the Gini impurity decrease versus the parent node. Ties break
    toward the lowest feature index, then the lowest threshold.
    """
    n = len(y)
    n1 = int(y.sum())
    parent = 1.0 - ((n1 / n) ** 2 + ((n - n1) / n) ** 2)
    feats = range(X.shape[1]) if feature_idx is None else feature_idx

    best = None
    for j in feats:
        xs = X[:, j]
        order = np.argsort(xs, kind="stable")
        xv = xs[order]
        yv = y[order]
        boundary = np.nonzero(xv[1:] > xv[:-1])[0] + 1  # split before these positions
        if len(boundary) == 0:
            continue
        cum1 = np.cumsum(yv)
        nl = boundary.astype(np.float64)
        l1 = cum1[boundary - 1].astype(np.float64)
        nr = n - nl
        r1 = n1 - l1
        gl = 1.0 - ((l1 / nl) ** 2 + ((nl - l1) / nl) ** 2)
        gr = 1.0 - ((r1 / nr) ** 2 + ((nr - r1) / nr) ** 2)
        gain = parent - (nl / n) * gl - (nr / n) * gr
        k = int(np.argmax(gain))
        g = float(gain[k])
        if g > 1e-15 and (best is None or g > best[2] + 1e-15):
            thr = 0.5 * (xv[boundary[k] - 1] + xv[boundary[k]])
            best = (int(j), float(thr), g)
    return best


class FlatTree:
    """Array-backed binary tree for fast vectorized prediction."""

    def __init__(self):
        self.feature = []
        self.threshold = []
        self.left = []
        self.right = []
        self.p1 = []  # fraction of class-1 samples at the node

    def _new_node(self, p1):
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.p1.append(p1)
        return len(self.p1) - 1

    def grow(self, X, y, rng=None, mtry=None):
        d = X.shape[1]
        root = self._new_node(float(y.mean()))
        stack = [(root, np.arange(len(y)))]
        while stack:
            node, idx = stack.pop()
            ysub = y[idx]
            if len(idx) < 2 or ysub.min() == ysub.max():
                continue
            if mtry is not None:
                feats = np.sort(rng.choice(d, size=min(mtry, d), replace=False))
            else:
                feats = None
            split = best_split(X[idx], ysub, feats)
            if split is None:
                continue
            j, thr, _ = split
            go_left = X[idx, j] <= thr
            li = idx[go_left]
            ri = idx[~go_left]
            self.feature[node] = j
            self.threshold[node] = thr
            self.left[node] = self._new_node(float(y[li].mean()))
            self.right[node] = self._new_node(float(y[ri].mean()))
            stack.append((self.left[node], li))
            stack.append((self.right[node], ri))
        self._freeze()
        return self

    def _freeze(self):
        self.feature = np.asarray(self.feature, dtype=np.int64)
        self.threshold = np.asarray(self.threshold, dtype=np.float64)
        self.left = np.asarray(self.left, dtype=np.int64)
        self.right = np.asarray(self.right, dtype=np.int64)
        self.p1 = np.asarray(self.p1, dtype=np.float64)

    def predict_p1(self, X):
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            active = self.feature[node] >= 0
            if not active.any():
                break
            idx = np.nonzero(active)[0]
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
        return self.p1[node]

    def to_nested(self, node=0):
        if self.feature[node] < 0:
            return {"p1": float(self.p1[node])}
        return {
            "feature": int(self.feature[node]),
            "threshold": float(self.threshold[node]),
            "p1": float(self.p1[node]),
            "left": self.to_nested(int(self.left[node])),
            "right": self.to_nested(int(self.right[node])),
        }

    @classmethod
    def from_nested(cls, doc):
        t = cls()

        def build(d):
            node = t._new_node(d["p1"])
            if "feature" in d:
                t.feature[node] = d["feature"]
                t.threshold[node] = d["threshold"]
                t.left[node] = build(d["left"])
                t.right[node] = build(d["right"])
            return node

        build(doc)
        t._freeze()
        return t


class DecisionTree(BaseModel):
    kind = "decision_tree"

    def __init__(self, feature_order, tree: FlatTree):
        super().__init__(feature_order)
        self.tree = tree

    def _score(self, X):
        return self.tree.predict_p1(X)

    def to_dict(self):
        return {"tree": self.tree.to_nested()}

    @classmethod
    def from_dict(cls, doc):
        return cls(doc["feature_order"], FlatTree.from_nested(doc["tree"]))


def fit_decision_tree(spec, X, y, feature_order) -> DecisionTree:
    return DecisionTree(feature_order, FlatTree().grow(X, y))


def best_weighted_stump(X, y, w):
    """Best depth-1 split by weighted Gini; returns (j, thr, p1_left, p1_right).

    Falls back to a constant stump (no split) when no feature varies.
    """
    wy = w * y
    W = w.sum()
    W1 = wy.sum()
    parent = 1.0 - ((W1 / W) ** 2 + ((W - W1) / W) ** 2)
    best = None
    for j in range(X.shape[1]):
        order = np.argsort(X[:, j], kind="stable")
        xv = X[order, j]
        cw = np.cumsum(w[order])
        cw1 = np.cumsum(wy[order])
        boundary = np.nonzero(xv[1:] > xv[:-1])[0] + 1
        if len(boundary) == 0:
            continue
        wl = cw[boundary - 1]
        wl1 = cw1[boundary - 1]
        wr = W - wl
        wr1 = W1 - wl1
        gl = 1.0 - ((wl1 / wl) ** 2 + ((wl - wl1) / wl) ** 2)
        gr = 1.0 - ((wr1 / wr) ** 2 + ((wr - wr1) / wr) ** 2)
        gain = parent - (wl / W) * gl - (wr / W) * gr
        k = int(np.argmax(gain))
        g = float(gain[k])
        if best is None or g > best[0] + 1e-15:
            thr = 0.5 * (xv[boundary[k] - 1] + xv[boundary[k]])
            best = (g, int(j), float(thr),
                    float(wl1[k] / wl[k]), float(wr1[k] / wr[k]))
    if best is None:
        p1 = float(W1 / W)
        return (-1, 0.0, p1, p1)
    return best[1:]
