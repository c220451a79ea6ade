"""Linear SVM (one-vs-rest, Pegasos-style subgradient training) and a Gini
random forest used by the baseline and ensemble pipelines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FormatError

C_GRID = (0.001, 0.003, 0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0)


@dataclass
class LinearSvm:
    weights: np.ndarray   # (d, c)
    bias: np.ndarray      # (c,)
    c_param: float
    objective_trace: list[float] = field(default_factory=list, repr=False)

    @property
    def n_classes(self) -> int:
        return self.weights.shape[1]

    def decision(self, X: np.ndarray) -> np.ndarray:
        return np.atleast_2d(X) @ self.weights + self.bias

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.decision(X), axis=1)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Softmax over margins; a monotone score, not a calibrated probability."""
        m = self.decision(X)
        m = m - m.max(axis=1, keepdims=True)
        e = np.exp(m)
        return e / e.sum(axis=1, keepdims=True)


def _ovr_targets(y: np.ndarray, c: int) -> np.ndarray:
    return np.where(y[:, None] == np.arange(c)[None, :], 1.0, -1.0)


def svm_objective(W: np.ndarray, b: np.ndarray, X: np.ndarray, Yb: np.ndarray, lam: float) -> float:
    """Sum over one-vs-rest problems of lam/2 ||w||^2 + mean hinge loss.

    The bias is treated as an extra regularised weight on a constant feature.
    """
    margins = Yb * (X @ W + b)
    hinge = np.maximum(0.0, 1.0 - margins).mean(axis=0)
    return float(np.sum(0.5 * lam * (np.sum(W * W, axis=0) + b * b) + hinge))


def svm_train(features, labels, c_param: float = 1.0, seed: int = 0, epochs: int = 100,
              batch_size: int = 32, n_classes: int | None = None) -> LinearSvm:
    """One-vs-rest linear SVM trained by mini-batch Pegasos.

    With regularisation lam = 1 / (c_param * n) the objective matches
    c_param * sum(hinge) + ||w||^2 / 2 up to scale. Steps follow eta_t =
    1 / (lam * t) with projection onto the ball of radius 1/sqrt(lam).
    Iterates of the second half of training are averaged. At every epoch end
    the current iterate and the running average are candidates, and the
    candidate with the lowest objective is returned; ``objective_trace``
    holds the best value so far and therefore never increases.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("features must be (n, d) with one label per row")
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("SVM training needs at least two classes")
    if c_param <= 0:
        raise ValueError("c_param must be positive")
    if epochs < 1:
        raise ValueError("epochs must be positive")
    c = int(n_classes if n_classes is not None else y.max() + 1)
    n, d = X.shape
    Yb = _ovr_targets(y, c)
    lam = 1.0 / (c_param * n)
    radius = 1.0 / math.sqrt(lam)
    Xa = np.hstack([X, np.ones((n, 1))])
    W = np.zeros((d + 1, c))
    avg = np.zeros_like(W)
    n_avg = 0
    rng = np.random.default_rng(seed)
    t = 0
    best, trace = W.copy(), []
    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idx = order[start:start + batch_size]
            t += 1
            eta = 1.0 / (lam * t)
            xb, yb = Xa[idx], Yb[idx]
            viol = (yb * (xb @ W)) < 1.0
            grad = lam * W - (xb.T @ (viol * yb)) / len(idx)
            W = W - eta * grad
            norms = np.linalg.norm(W, axis=0)
            W = W * np.minimum(1.0, radius / np.maximum(norms, 1e-300))
            if epoch >= epochs // 2:
                n_avg += 1
                avg += (W - avg) / n_avg
        best_obj = trace[-1] if trace else np.inf
        for cand in ((W, avg) if n_avg else (W,)):
            obj = svm_objective(cand[:-1], cand[-1], X, Yb, lam)
            if obj < best_obj:
                best, best_obj = cand.copy(), obj
        trace.append(best_obj)
    return LinearSvm(best[:-1], best[-1], c_param, trace)


def svm_predict(model: LinearSvm, feature) -> int:
    """Class with the largest margin (ties go to the lowest class id)."""
    x = np.asarray(feature, dtype=np.float64)
    if x.shape != (model.weights.shape[0],):
        raise ValueError(f"feature has shape {x.shape}, expected ({model.weights.shape[0]},)")
    return int(np.argmax(x @ model.weights + model.bias))


def tune_svm(X_train, y_train, X_dev, y_dev, n_classes: int, seed: int = 0,
             grid: Sequence[float] = C_GRID) -> tuple[LinearSvm, float, list[tuple[float, float]]]:
    """Pick c on dev macro F1; returns (model, best c, [(c, dev F1)])."""
    from .evaluation import macro_f1

    results = []
    best = None
    for c_param in grid:
        model = svm_train(X_train, y_train, c_param, seed=seed, n_classes=n_classes)
        f1 = macro_f1(y_dev, model.predict(X_dev), n_classes)
        results.append((c_param, f1))
        if best is None or f1 > best[0]:
            best = (f1, model)
    assert best is not None
    return best[1], best[1].c_param, results


def save_svm(model: LinearSvm, path: str | Path) -> None:
    d, c = model.weights.shape
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        f.write(f"SVM 1 {d} {c} {model.c_param:.17g}\n")
        for row in model.weights:
            f.write(" ".join(f"{x:.17g}" for x in row) + "\n")
        f.write(" ".join(f"{x:.17g}" for x in model.bias) + "\n")


def load_svm(path: str | Path) -> LinearSvm:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    head = lines[0].split() if lines else []
    if len(head) != 5 or head[:2] != ["SVM", "1"]:
        raise FormatError(f"{path}: not an SVM v1 file")
    d, c, c_param = int(head[2]), int(head[3]), float(head[4])
    rows = np.array([[float(x) for x in line.split()] for line in lines[1:]])
    if rows.shape != (d + 1, c):
        raise FormatError(f"{path}: expected {d + 1} rows of {c} values")
    return LinearSvm(rows[:d], rows[d], c_param)


# ---------------------------------------------------------------------------
# random forest


@dataclass
class DecisionTree:
    """Array-encoded binary tree; leaves have feature == -1."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray      # (n_nodes, c) class distribution, sums to 1

    def leaf_distribution(self, x: np.ndarray) -> np.ndarray:
        node = 0
        while self.feature[node] >= 0:
            node = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
        return self.value[node]

    def predict_one(self, x: np.ndarray) -> int:
        return int(np.argmax(self.leaf_distribution(x)))


def _gini(counts: np.ndarray) -> np.ndarray:
    tot = counts.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = counts / np.where(tot == 0, 1, tot)[..., None]
    return 1.0 - np.sum(p * p, axis=-1)


def _best_split(X: np.ndarray, y: np.ndarray, c: int, feats: np.ndarray, min_leaf: int = 1):
    """(gain, feature, threshold) of the best Gini split over ``feats`` that
    leaves at least ``min_leaf`` samples on each side."""
    n = len(y)
    parent = _gini(np.bincount(y, minlength=c).astype(float))
    best = (0.0, -1, 0.0)
    onehot = np.eye(c)[y]
    for f in feats:
        order = np.argsort(X[:, f], kind="stable")
        xs = X[order, f]
        cum = np.cumsum(onehot[order], axis=0)[:-1]    # left counts after i+1 samples
        n_left = np.arange(1, n)
        valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n - n_left >= min_leaf)
        if not valid.any():
            continue
        total = cum[-1] + onehot[order[-1]]
        imp = (n_left * _gini(cum) + (n - n_left) * _gini(total - cum)) / n
        imp = np.where(valid, imp, np.inf)
        i = int(np.argmin(imp))
        gain = parent - imp[i]
        if gain > best[0] + 1e-12:
            best = (gain, int(f), 0.5 * (xs[i] + xs[i + 1]))
    return best


def _grow_tree(X: np.ndarray, y: np.ndarray, c: int, max_features: int, max_depth: int | None,
               rng: np.random.Generator, min_leaf: int = 1) -> DecisionTree:
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        counts = np.bincount(y[idx], minlength=c).astype(float)
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(counts / counts.sum())
        return len(feature) - 1

    root = new_node(np.arange(len(y)))
    stack = [(root, np.arange(len(y)), 0)]
    while stack:
        node, idx, depth = stack.pop()
        if (max_depth is not None and depth >= max_depth) or len(np.unique(y[idx])) < 2 \
                or len(idx) < 2 * min_leaf:
            continue
        feats = rng.choice(X.shape[1], size=max_features, replace=False)
        gain, f, thr = _best_split(X[idx], y[idx], c, feats, min_leaf)
        if f < 0:
            continue
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        ln, rn = new_node(li), new_node(ri)
        feature[node], threshold[node], left[node], right[node] = f, thr, ln, rn
        stack.append((rn, ri, depth + 1))
        stack.append((ln, li, depth + 1))
    return DecisionTree(np.array(feature), np.array(threshold), np.array(left),
                        np.array(right), np.array(value))


@dataclass
class ForestConfig:
    n_trees: int = 200
    max_depth: int | None = None
    seed: int = 0
    bootstrap: bool = True
    min_samples_leaf: int = 5


@dataclass
class RandomForest:
    trees: list[DecisionTree]
    n_features: int
    n_classes: int
    config: ForestConfig
    oob_score: float = float("nan")

    def votes(self, x: np.ndarray) -> np.ndarray:
        counts = np.zeros(self.n_classes, dtype=np.int64)
        for t in self.trees:
            counts[t.predict_one(x)] += 1
        return counts

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.array([forest_predict(self, x) for x in np.atleast_2d(X)], dtype=np.int64)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return np.array([np.mean([t.leaf_distribution(x) for t in self.trees], axis=0)
                         for x in np.atleast_2d(X)])


def forest_train(features, labels, config: ForestConfig | None = None,
                 n_classes: int | None = None) -> RandomForest:
    """Bootstrap-aggregated Gini trees, ceil(sqrt(arity)) features per split."""
    cfg = config or ForestConfig()
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("features must be (n, arity) with one label per row")
    if len(np.unique(y)) < 2:
        raise ValueError("forest training needs at least two classes")
    c = int(n_classes if n_classes is not None else y.max() + 1)
    n, arity = X.shape
    max_features = max(1, math.ceil(math.sqrt(arity)))
    master = np.random.default_rng(cfg.seed)
    tree_seeds = master.integers(0, 2**63 - 1, size=cfg.n_trees)
    trees = []
    oob_votes = np.zeros((n, c), dtype=np.int64)
    for s in tree_seeds:
        rng = np.random.default_rng(int(s))
        idx = rng.integers(0, n, size=n) if cfg.bootstrap else np.arange(n)
        tree = _grow_tree(X[idx], y[idx], c, max_features, cfg.max_depth, rng, cfg.min_samples_leaf)
        trees.append(tree)
        if cfg.bootstrap:
            oob = np.setdiff1d(np.arange(n), idx)
            for i in oob:
                oob_votes[i, tree.predict_one(X[i])] += 1
    forest = RandomForest(trees, arity, c, cfg)
    has_vote = oob_votes.sum(axis=1) > 0
    if cfg.bootstrap and has_vote.any():
        forest.oob_score = float(np.mean(np.argmax(oob_votes[has_vote], axis=1) == y[has_vote]))
    return forest


def forest_predict(model: RandomForest, feature) -> int:
    """Majority vote over trees; ties go to the lowest class id."""
    x = np.asarray(feature, dtype=np.float64)
    if x.shape != (model.n_features,):
        raise ValueError(f"feature has shape {x.shape}, expected ({model.n_features},)")
    return int(np.argmax(model.votes(x)))


def save_forest(model: RandomForest, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as f:
        f.write(f"RF 1 {len(model.trees)} {model.n_features} {model.n_classes}\n")
        for t in model.trees:
            f.write(f"TREE {len(t.feature)}\n")
            for i in range(len(t.feature)):
                f.write(f"{t.feature[i]} {t.threshold[i]:.17g} {t.left[i]} {t.right[i]} "
                        + " ".join(f"{v:.17g}" for v in t.value[i]) + "\n")


def load_forest(path: str | Path) -> RandomForest:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    head = lines[0].split() if lines else []
    if len(head) != 5 or head[:2] != ["RF", "1"]:
        raise FormatError(f"{path}: not an RF v1 file")
    n_trees, arity, c = int(head[2]), int(head[3]), int(head[4])
    trees, pos = [], 1
    for _ in range(n_trees):
        tag, count = lines[pos].split()
        if tag != "TREE":
            raise FormatError(f"{path}:{pos + 1}: expected TREE header")
        rows = [lines[pos + 1 + i].split() for i in range(int(count))]
        pos += 1 + int(count)
        trees.append(DecisionTree(
            np.array([int(r[0]) for r in rows]), np.array([float(r[1]) for r in rows]),
            np.array([int(r[2]) for r in rows]), np.array([int(r[3]) for r in rows]),
            np.array([[float(v) for v in r[4:]] for r in rows])))
    return RandomForest(trees, arity, c, ForestConfig(n_trees=n_trees))
