"""Tree and linear learners behind the model artifacts.

All learners work on a dense float matrix and per-row sample weights and
serialize to plain JSON-compatible dicts. Trees grow greedily on
histogram-binned features: every split minimizes the weighted squared error
of the node target, which for 0/1 targets is the weighted Gini criterion and
for boosting (target = Newton step, weight = hessian) is the second-order
gain.
"""

import math
from abc import ABC, abstractmethod
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from joblib import Parallel, delayed

try:
    from .errors import TrainingError
except ImportError:
    from errors import TrainingError


class Algorithm(str, Enum):
    LOGISTIC_REGRESSION = "logistic_regression"
    RANDOM_FOREST = "random_forest"
    GRADIENT_BOOSTED_TREES = "gradient_boosted_trees"
    DECISION_TREE = "decision_tree"


class Task(str, Enum):
    CLASSIFY = "classify"
    REGRESS = "regress"


CLASSIFIERS = (Algorithm.LOGISTIC_REGRESSION, Algorithm.RANDOM_FOREST, Algorithm.GRADIENT_BOOSTED_TREES)
REGRESSORS = (Algorithm.RANDOM_FOREST, Algorithm.GRADIENT_BOOSTED_TREES, Algorithm.DECISION_TREE)


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(z, -500.0, 500.0)))


def fit_bins(X: np.ndarray, max_bins: int) -> List[np.ndarray]:
    """Candidate split thresholds per column.

    Columns with at most `max_bins` distinct values split between consecutive
    values; wider columns split at interior quantiles.
    """
    thresholds = []
    for j in range(X.shape[1]):
        values = np.unique(X[:, j])
        if values.size <= max_bins:
            thresholds.append((values[:-1] + values[1:]) / 2.0)
        else:
            quantiles = np.quantile(X[:, j], np.linspace(0.0, 1.0, max_bins + 1)[1:-1])
            thresholds.append(np.unique(quantiles))
    return thresholds


def apply_bins(X: np.ndarray, thresholds: List[np.ndarray]) -> np.ndarray:
    """Bin index of each value: the number of thresholds <= value.

    bin <= b  <=>  value < thresholds[b], which is the rule `predict` uses on
    raw values.
    """
    binned = np.empty(X.shape, dtype=np.int64)
    for j, thr in enumerate(thresholds):
        binned[:, j] = np.searchsorted(thr, X[:, j], side="right")
    return binned


class HistogramTree:
    """Binary regression tree on binned features, stored as flat node arrays."""

    def __init__(self, max_depth: int, min_samples_leaf: int = 1, max_features: Optional[int] = None):
        self.max_depth = max_depth
        self.min_samples_leaf = max(1, min_samples_leaf)
        self.max_features = max_features
        self.feature: List[int] = []
        self.threshold: List[float] = []
        self.left: List[int] = []
        self.right: List[int] = []
        self.value: List[float] = []
        self.importances: Optional[np.ndarray] = None

    def fit(self, binned: np.ndarray, thresholds: List[np.ndarray], target: np.ndarray,
            weight: np.ndarray, rng: Optional[np.random.Generator] = None,
            counts: Optional[np.ndarray] = None) -> "HistogramTree":
        """Grow the tree; `counts` are row multiplicities (bootstrap draws) used for leaf sizes."""
        self._X = binned
        self._thresholds = thresholds
        self._n_thresholds = np.array([t.size for t in thresholds], dtype=np.int64)
        self._n_bins = int(self._n_thresholds.max(initial=0)) + 1
        self._w = weight
        self._wz = weight * target
        self._wzz = weight * target * target
        self._n = np.ones(weight.shape[0]) if counts is None else counts.astype(float)
        self._rng = rng
        self.importances = np.zeros(binned.shape[1])

        self._grow(np.flatnonzero(weight > 0), 0)

        del self._X, self._thresholds, self._w, self._wz, self._wzz, self._n, self._rng
        return self

    def _add_leaf(self, value: float) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(value))
        return len(self.feature) - 1

    def _grow(self, rows: np.ndarray, depth: int) -> int:
        total_w = self._w[rows].sum()
        total_wz = self._wz[rows].sum()
        node = self._add_leaf(total_wz / total_w if total_w > 0 else 0.0)

        if depth >= self.max_depth or self._n[rows].sum() < 2 * self.min_samples_leaf or total_w <= 0:
            return node

        split = self._best_split(rows, total_w, total_wz)
        if split is None:
            return node

        feature, bin_index, gain = split
        self.importances[feature] += gain
        go_left = self._X[rows, feature] <= bin_index
        self.feature[node] = int(feature)
        self.threshold[node] = float(self._thresholds[feature][bin_index])
        self.left[node] = self._grow(rows[go_left], depth + 1)
        self.right[node] = self._grow(rows[~go_left], depth + 1)
        return node

    def _candidate_features(self) -> np.ndarray:
        n_features = self._X.shape[1]
        if self.max_features is None or self.max_features >= n_features or self._rng is None:
            return np.arange(n_features)
        return np.sort(self._rng.choice(n_features, size=self.max_features, replace=False))

    def _best_split(self, rows: np.ndarray, total_w: float, total_wz: float):
        features = self._candidate_features()
        n_bins = self._n_bins
        if n_bins < 2 or features.size == 0:
            return None

        f = features.size
        flat = (self._X[np.ix_(rows, features)] + np.arange(f) * n_bins).ravel()
        size = f * n_bins
        hist_w = np.bincount(flat, weights=np.repeat(self._w[rows], f), minlength=size).reshape(f, n_bins)
        hist_wz = np.bincount(flat, weights=np.repeat(self._wz[rows], f), minlength=size).reshape(f, n_bins)
        hist_n = np.bincount(flat, weights=np.repeat(self._n[rows], f), minlength=size).reshape(f, n_bins)

        left_w = np.cumsum(hist_w, axis=1)[:, :-1]
        left_wz = np.cumsum(hist_wz, axis=1)[:, :-1]
        left_n = np.cumsum(hist_n, axis=1)[:, :-1]
        right_w = total_w - left_w
        right_wz = total_wz - left_wz
        right_n = self._n[rows].sum() - left_n

        bins = np.arange(n_bins - 1)
        valid = (
            (left_n >= self.min_samples_leaf)
            & (right_n >= self.min_samples_leaf)
            & (left_w > 0)
            & (right_w > 0)
            & (bins[None, :] < self._n_thresholds[features][:, None])
        )
        if not valid.any():
            return None

        with np.errstate(divide="ignore", invalid="ignore"):
            gain = left_wz ** 2 / left_w + right_wz ** 2 / right_w - total_wz ** 2 / total_w
        gain = np.where(valid, gain, -np.inf)

        best = int(np.argmax(gain))
        best_gain = float(gain.flat[best])
        tolerance = 1e-12 * max(1.0, float(self._wzz[rows].sum()))
        if not best_gain > tolerance:
            return None
        row, bin_index = divmod(best, n_bins - 1)
        return int(features[row]), int(bin_index), best_gain

    def predict(self, X: np.ndarray) -> np.ndarray:
        feature = np.asarray(self.feature, dtype=np.int64)
        threshold = np.asarray(self.threshold, dtype=float)
        left = np.asarray(self.left, dtype=np.int64)
        right = np.asarray(self.right, dtype=np.int64)
        value = np.asarray(self.value, dtype=float)

        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            active = np.flatnonzero(feature[node] >= 0)
            if active.size == 0:
                break
            current = node[active]
            go_left = X[active, feature[current]] < threshold[current]
            node[active] = np.where(go_left, left[current], right[current])
        return value[node]

    def to_params(self) -> Dict[str, Any]:
        return {
            "feature": list(self.feature),
            "threshold": list(self.threshold),
            "left": list(self.left),
            "right": list(self.right),
            "value": list(self.value),
        }

    @classmethod
    def from_params(cls, params: Dict[str, Any]) -> "HistogramTree":
        tree = cls(max_depth=0)
        tree.feature = list(params["feature"])
        tree.threshold = list(params["threshold"])
        tree.left = list(params["left"])
        tree.right = list(params["right"])
        tree.value = list(params["value"])
        return tree


def _normalized(importances: np.ndarray) -> np.ndarray:
    total = importances.sum()
    return importances / total if total > 0 else np.zeros_like(importances)


class EstimatorInterface(ABC):
    """Learner contract shared by every algorithm family."""

    algorithm: Algorithm

    def __init__(self, task: Task):
        self.task = task
        self.feature_importances: Optional[np.ndarray] = None

    @abstractmethod
    def fit(self, X: np.ndarray, y: np.ndarray, sample_weight: np.ndarray, seed: int) -> "EstimatorInterface":
        """Fit on a dense matrix with per-row weights."""
        pass

    @abstractmethod
    def predict(self, X: np.ndarray) -> np.ndarray:
        """Class-1 probability (classify) or value (regress) per row."""
        pass

    @abstractmethod
    def to_params(self) -> Dict[str, Any]:
        """JSON-compatible fitted parameters."""
        pass

    @abstractmethod
    def load_params(self, params: Dict[str, Any]):
        """Restore fitted parameters produced by `to_params`."""
        pass

    def _finish(self, output: np.ndarray) -> np.ndarray:
        if self.task is Task.CLASSIFY:
            return np.clip(output, 0.0, 1.0)
        return output


class DecisionTreeModel(EstimatorInterface):
    algorithm = Algorithm.DECISION_TREE

    def __init__(self, task: Task, max_depth: int = 6, min_samples_leaf: int = 1, max_bins: int = 64):
        super().__init__(task)
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_bins = max_bins
        self.tree: Optional[HistogramTree] = None

    def fit(self, X, y, sample_weight, seed):
        thresholds = fit_bins(X, self.max_bins)
        self.tree = HistogramTree(self.max_depth, self.min_samples_leaf)
        self.tree.fit(apply_bins(X, thresholds), thresholds, y.astype(float), sample_weight)
        self.feature_importances = _normalized(self.tree.importances)
        return self

    def predict(self, X):
        return self._finish(self.tree.predict(X))

    def to_params(self):
        return {"tree": self.tree.to_params(), "importances": self.feature_importances.tolist()}

    def load_params(self, params):
        self.tree = HistogramTree.from_params(params["tree"])
        self.feature_importances = np.asarray(params["importances"], dtype=float)


class RandomForestModel(EstimatorInterface):
    """Bagged trees with a random feature subset per split.

    Tree t draws its bootstrap and feature subsets from a generator seeded
    with (seed, t), so serial and parallel fits are identical.
    """

    algorithm = Algorithm.RANDOM_FOREST

    def __init__(self, task: Task, n_trees: int = 100, max_depth: int = 6, min_samples_leaf: int = 1,
                 max_features: Any = "sqrt", max_bins: int = 64, jobs: int = 1):
        super().__init__(task)
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.max_bins = max_bins
        self.jobs = jobs
        self.trees: List[HistogramTree] = []

    def _features_per_split(self, n_features: int) -> int:
        if self.max_features == "sqrt":
            return max(1, math.ceil(math.sqrt(n_features)))
        if self.max_features in (None, "all"):
            return n_features
        return max(1, min(n_features, int(self.max_features)))

    def fit(self, X, y, sample_weight, seed):
        n_rows, n_features = X.shape
        thresholds = fit_bins(X, self.max_bins)
        binned = apply_bins(X, thresholds)
        per_split = self._features_per_split(n_features)
        target = y.astype(float)

        def _grow(tree_index: int) -> HistogramTree:
            rng = np.random.default_rng([seed, tree_index])
            counts = np.bincount(rng.integers(0, n_rows, n_rows), minlength=n_rows)
            tree = HistogramTree(self.max_depth, self.min_samples_leaf, per_split)
            return tree.fit(binned, thresholds, target, sample_weight * counts, rng, counts)

        self.trees = Parallel(n_jobs=self.jobs, prefer="threads")(
            delayed(_grow)(t) for t in range(self.n_trees))
        self.feature_importances = _normalized(
            sum((_normalized(t.importances) for t in self.trees), np.zeros(n_features)))
        return self

    def predict(self, X):
        return self._finish(np.mean([tree.predict(X) for tree in self.trees], axis=0))

    def to_params(self):
        return {
            "trees": [tree.to_params() for tree in self.trees],
            "importances": self.feature_importances.tolist(),
        }

    def load_params(self, params):
        self.trees = [HistogramTree.from_params(p) for p in params["trees"]]
        self.feature_importances = np.asarray(params["importances"], dtype=float)


class GradientBoostedTreesModel(EstimatorInterface):
    """Additive trees fitted by Newton steps on logistic loss (classify) or squared error (regress)."""

    algorithm = Algorithm.GRADIENT_BOOSTED_TREES

    def __init__(self, task: Task, n_trees: int = 100, max_depth: int = 3, learning_rate: float = 0.1,
                 min_samples_leaf: int = 1, max_bins: int = 64):
        super().__init__(task)
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.min_samples_leaf = min_samples_leaf
        self.max_bins = max_bins
        self.base_score = 0.0
        self.trees: List[HistogramTree] = []

    def fit(self, X, y, sample_weight, seed):
        y = y.astype(float)
        thresholds = fit_bins(X, self.max_bins)
        binned = apply_bins(X, thresholds)
        total_w = sample_weight.sum()
        mean = float((sample_weight * y).sum() / total_w) if total_w > 0 else 0.0

        if self.task is Task.CLASSIFY:
            prior = min(max(mean, 1e-6), 1 - 1e-6)
            self.base_score = math.log(prior / (1 - prior))
        else:
            self.base_score = mean

        raw = np.full(X.shape[0], self.base_score)
        importances = np.zeros(X.shape[1])
        self.trees = []
        for _ in range(self.n_trees):
            if self.task is Task.CLASSIFY:
                p = sigmoid(raw)
                hessian = np.maximum(p * (1 - p), 1e-6)
                target, weight = (y - p) / hessian, sample_weight * hessian
            else:
                target, weight = y - raw, sample_weight
            tree = HistogramTree(self.max_depth, self.min_samples_leaf).fit(binned, thresholds, target, weight)
            raw += self.learning_rate * tree.predict(X)
            importances += tree.importances
            self.trees.append(tree)

        self.feature_importances = _normalized(importances)
        return self

    def raw_score(self, X: np.ndarray) -> np.ndarray:
        raw = np.full(X.shape[0], self.base_score)
        for tree in self.trees:
            raw += self.learning_rate * tree.predict(X)
        return raw

    def predict(self, X):
        raw = self.raw_score(X)
        return sigmoid(raw) if self.task is Task.CLASSIFY else raw

    def to_params(self):
        return {
            "base_score": self.base_score,
            "trees": [tree.to_params() for tree in self.trees],
            "importances": self.feature_importances.tolist(),
        }

    def load_params(self, params):
        self.base_score = float(params["base_score"])
        self.trees = [HistogramTree.from_params(p) for p in params["trees"]]
        self.feature_importances = np.asarray(params["importances"], dtype=float)


class LogisticRegressionModel(EstimatorInterface):
    """L2-penalized weighted logistic regression fitted by Newton iterations.

    Columns are standardized with training mean/scale; the intercept is not
    penalized.
    """

    algorithm = Algorithm.LOGISTIC_REGRESSION

    def __init__(self, task: Task, l2: float = 1.0, max_iter: int = 100, tol: float = 1e-10):
        super().__init__(task)
        if l2 <= 0:
            raise TrainingError(f"logistic l2 penalty must be positive, got {l2}", {"l2": l2})
        self.l2 = l2
        self.max_iter = max_iter
        self.tol = tol
        self.intercept = 0.0
        self.coef = np.zeros(0)
        self.mean = np.zeros(0)
        self.scale = np.ones(0)

    def fit(self, X, y, sample_weight, seed):
        self.mean = X.mean(axis=0) if X.shape[0] else np.zeros(X.shape[1])
        scale = X.std(axis=0) if X.shape[0] else np.ones(X.shape[1])
        self.scale = np.where(scale > 0, scale, 1.0)
        design = np.hstack([np.ones((X.shape[0], 1)), (X - self.mean) / self.scale])
        penalty = np.full(design.shape[1], self.l2)
        penalty[0] = 0.0

        beta = np.zeros(design.shape[1])
        y = y.astype(float)
        for _ in range(self.max_iter):
            p = sigmoid(design @ beta)
            gradient = design.T @ (sample_weight * (p - y)) + penalty * beta
            hessian = (design.T * (sample_weight * p * (1 - p))) @ design + np.diag(penalty + 1e-12)
            step = np.linalg.solve(hessian, gradient)
            beta -= step
            if np.max(np.abs(step)) < self.tol:
                break

        self.intercept = float(beta[0])
        self.coef = beta[1:]
        return self

    def predict(self, X):
        return sigmoid(self.intercept + ((X - self.mean) / self.scale) @ self.coef)

    def to_params(self):
        return {
            "intercept": self.intercept,
            "coef": self.coef.tolist(),
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
        }

    def load_params(self, params):
        self.intercept = float(params["intercept"])
        self.coef = np.asarray(params["coef"], dtype=float)
        self.mean = np.asarray(params["mean"], dtype=float)
        self.scale = np.asarray(params["scale"], dtype=float)


class EstimatorFactory:
    """Factory for creating learners from an algorithm name and hyperparameters."""

    _classes = {
        Algorithm.LOGISTIC_REGRESSION: LogisticRegressionModel,
        Algorithm.RANDOM_FOREST: RandomForestModel,
        Algorithm.GRADIENT_BOOSTED_TREES: GradientBoostedTreesModel,
        Algorithm.DECISION_TREE: DecisionTreeModel,
    }

    @staticmethod
    def create(algorithm: Algorithm, task: Task, hyperparameters: Optional[Dict[str, Any]] = None,
               jobs: int = 1) -> EstimatorInterface:
        """Create an unfitted learner."""
        algorithm = Algorithm(algorithm)
        task = Task(task)
        if algorithm is Algorithm.LOGISTIC_REGRESSION and task is Task.REGRESS:
            raise TrainingError("logistic regression is not available for regression",
                                {"algorithm": algorithm.value})
        kwargs = dict(hyperparameters or {})
        if algorithm is Algorithm.RANDOM_FOREST:
            kwargs["jobs"] = jobs
        try:
            return EstimatorFactory._classes[algorithm](task, **kwargs)
        except TypeError as e:
            raise TrainingError(f"invalid hyperparameters for {algorithm.value}: {e}",
                                {"algorithm": algorithm.value, "hyperparameters": hyperparameters}) from e

    @staticmethod
    def restore(algorithm: Algorithm, task: Task, hyperparameters: Dict[str, Any],
                params: Dict[str, Any]) -> EstimatorInterface:
        """Recreate a fitted learner from serialized parameters."""
        estimator = EstimatorFactory.create(algorithm, task, hyperparameters)
        estimator.load_params(params)
        return estimator
