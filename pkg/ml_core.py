"""Training and evaluation engine shared by the xG, scorer and transfer stages.

A `Dataset` is a typed feature table; `train_classifier`/`train_regressor`
grid-search one algorithm family on it and return a `ModelArtifact`, a
self-describing JSON document that predicts without any live Python state.
"""

import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from loguru import logger
from sklearn.metrics import (
    confusion_matrix,
    mean_absolute_error,
    mean_squared_error,
    precision_recall_curve,
    precision_recall_fscore_support,
    roc_auc_score,
)
from sklearn.model_selection import ParameterGrid, train_test_split

try:
    from .errors import DatasetError, SchemaMismatchError, TrainingError
    from .estimators import Algorithm, EstimatorFactory, Task
except ImportError:
    from errors import DatasetError, SchemaMismatchError, TrainingError
    from estimators import Algorithm, EstimatorFactory, Task


ARTIFACT_FORMAT_VERSION = 1
UNKNOWN_LEVEL = "__unknown__"
CLASSIFICATION_METRICS = ("f1_weighted", "recall_weighted")
REGRESSION_METRICS = ("mae", "rmse")


class FeatureKind(str, Enum):
    CATEGORICAL = "categorical"
    CONTINUOUS = "continuous"
    DISCRETE = "discrete"


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: FeatureKind


def schema_fingerprint(schema: Sequence[FeatureSpec]) -> str:
    canonical = json.dumps([[f.name, f.kind.value] for f in schema], separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class Dataset:
    """Feature table with a typed schema, a numeric target and row ids.

    Numeric columns are stored as float64 and must be finite; categorical
    columns are stored as strings and define the dataset vocabulary.
    """

    def __init__(self, schema: Sequence[FeatureSpec], frame: pd.DataFrame, target, row_ids: Sequence[str]):
        self.schema = list(schema)
        names = [f.name for f in self.schema]
        if len(set(names)) != len(names):
            raise DatasetError("duplicate feature names in schema", {"features": names})
        missing = [n for n in names if n not in frame.columns]
        if missing:
            raise DatasetError(f"rows lack schema features: {missing}", {"missing": missing})

        self.row_ids = [str(r) for r in row_ids]
        self.target = np.asarray(target, dtype=float).reshape(-1)
        if not (len(frame) == len(self.target) == len(self.row_ids)):
            raise DatasetError(
                "rows, target and row ids differ in length",
                {"rows": len(frame), "target": len(self.target), "row_ids": len(self.row_ids)},
            )

        columns = {}
        for feature in self.schema:
            column = frame[feature.name].reset_index(drop=True)
            if feature.kind is FeatureKind.CATEGORICAL:
                if column.isna().any():
                    raise DatasetError(
                        f"missing categorical value in '{feature.name}' at row "
                        f"{self.row_ids[int(np.flatnonzero(column.isna().to_numpy())[0])]}",
                        {"feature": feature.name},
                    )
                columns[feature.name] = column.astype(str)
            else:
                values = pd.to_numeric(column, errors="coerce").to_numpy(dtype=float)
                bad = np.flatnonzero(~np.isfinite(values))
                if bad.size:
                    row_id = self.row_ids[int(bad[0])]
                    raise DatasetError(
                        f"non-finite value in {feature.kind.value} feature '{feature.name}' at row {row_id}",
                        {"feature": feature.name, "row_id": row_id},
                    )
                columns[feature.name] = values
        self.frame = pd.DataFrame(columns, columns=names)

        bad_target = np.flatnonzero(~np.isfinite(self.target))
        if bad_target.size:
            row_id = self.row_ids[int(bad_target[0])]
            raise DatasetError(f"non-finite target at row {row_id}", {"row_id": row_id})

        self.vocabulary: Dict[str, List[str]] = {
            f.name: sorted(self.frame[f.name].unique().tolist())
            for f in self.schema if f.kind is FeatureKind.CATEGORICAL
        }

    @classmethod
    def from_records(cls, schema: Sequence[FeatureSpec], records: Sequence[Dict[str, Any]],
                     target_key: str = "label", id_key: str = "row_id") -> "Dataset":
        names = [f.name for f in schema]
        frame = pd.DataFrame([{n: r.get(n) for n in names} for r in records], columns=names)
        return cls(schema, frame, [r[target_key] for r in records], [r[id_key] for r in records])

    def __len__(self) -> int:
        return len(self.row_ids)

    @property
    def fingerprint(self) -> str:
        return schema_fingerprint(self.schema)

    @property
    def feature_names(self) -> List[str]:
        return [f.name for f in self.schema]

    @property
    def prevalence(self) -> float:
        """Share of rows with target 1 (0.0 for an empty dataset)."""
        return float(np.mean(self.target == 1)) if len(self) else 0.0

    def is_binary(self) -> bool:
        return bool(np.isin(self.target, (0.0, 1.0)).all())

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(
            self.schema,
            self.frame.iloc[indices].reset_index(drop=True),
            self.target[indices],
            [self.row_ids[i] for i in indices],
        )

    def without(self, feature_names: Sequence[str]) -> "Dataset":
        """Copy of the dataset with the given features removed from the schema."""
        schema = [f for f in self.schema if f.name not in set(feature_names)]
        return Dataset(schema, self.frame[[f.name for f in schema]], self.target, self.row_ids)

    def to_records(self, target_key: str = "label") -> List[Dict[str, Any]]:
        records = []
        for i, row in enumerate(self.frame.to_dict("records")):
            record = {"row_id": self.row_ids[i]}
            for feature in self.schema:
                value = row[feature.name]
                record[feature.name] = value if feature.kind is FeatureKind.CATEGORICAL else float(value)
            record[target_key] = float(self.target[i])
            records.append(record)
        return records


@dataclass
class PredictionStats:
    """Counters filled while encoding rows for prediction."""

    unknown_levels: int = 0


def _numeric(dataset: Dataset, name: str) -> np.ndarray:
    return dataset.frame[name].to_numpy(dtype=float)


class OneHotEncoding:
    """Numeric features as-is, categorical features as one column per training level.

    Every categorical feature also gets an `__unknown__` column for levels
    never seen in training.
    """

    kind = "one_hot"

    def __init__(self, schema: Sequence[FeatureSpec], levels: Optional[Dict[str, List[str]]] = None):
        self.schema = list(schema)
        self.levels = levels or {}

    def fit_transform(self, dataset: Dataset, seed: int) -> np.ndarray:
        self.levels = {name: list(values) for name, values in dataset.vocabulary.items()}
        return self.transform(dataset)

    @property
    def column_features(self) -> List[str]:
        columns = []
        for feature in self.schema:
            width = len(self.levels[feature.name]) + 1 if feature.kind is FeatureKind.CATEGORICAL else 1
            columns.extend([feature.name] * width)
        return columns

    def transform(self, dataset: Dataset, stats: Optional[PredictionStats] = None) -> np.ndarray:
        blocks = []
        for feature in self.schema:
            if feature.kind is not FeatureKind.CATEGORICAL:
                blocks.append(_numeric(dataset, feature.name)[:, None])
                continue
            levels = self.levels[feature.name]
            index = {level: i for i, level in enumerate(levels)}
            codes = np.array([index.get(v, len(levels)) for v in dataset.frame[feature.name]], dtype=np.int64)
            if stats is not None:
                stats.unknown_levels += int((codes == len(levels)).sum())
            block = np.zeros((len(dataset), len(levels) + 1))
            block[np.arange(len(dataset)), codes] = 1.0
            blocks.append(block)
        if not blocks:
            return np.zeros((len(dataset), 0))
        return np.hstack(blocks)

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "levels": self.levels}


class OrderedTargetEncoding:
    """Categorical levels replaced by smoothed target means.

    Training rows see only the rows before them in a seeded permutation, so a
    row's own label never leaks into its encoding. Prediction uses statistics
    over the whole training set; unseen levels fall back to the prior.
    """

    kind = "ordered_target"

    def __init__(self, schema: Sequence[FeatureSpec], prior: float = 0.0, strength: float = 1.0,
                 statistics: Optional[Dict[str, Dict[str, float]]] = None):
        self.schema = list(schema)
        self.prior = prior
        self.strength = strength
        self.statistics = statistics or {}

    @property
    def column_features(self) -> List[str]:
        return [f.name for f in self.schema]

    def fit_transform(self, dataset: Dataset, seed: int) -> np.ndarray:
        y = dataset.target
        self.prior = float(y.mean()) if len(dataset) else 0.0
        a = self.strength
        permutation = np.random.default_rng(seed).permutation(len(dataset))

        columns = []
        self.statistics = {}
        for feature in self.schema:
            if feature.kind is not FeatureKind.CATEGORICAL:
                columns.append(_numeric(dataset, feature.name))
                continue
            values = dataset.frame[feature.name].to_numpy()
            ordered = pd.Series(y[permutation])
            groups = values[permutation]
            seen_sum = ordered.groupby(groups).cumsum().to_numpy() - ordered.to_numpy()
            seen_count = ordered.groupby(groups).cumcount().to_numpy()
            encoded = np.empty(len(dataset))
            encoded[permutation] = (seen_sum + a * self.prior) / (seen_count + a)
            columns.append(encoded)

            totals = pd.Series(y).groupby(values).agg(["sum", "count"])
            self.statistics[feature.name] = {
                str(level): float((row["sum"] + a * self.prior) / (row["count"] + a))
                for level, row in totals.iterrows()
            }
        return np.column_stack(columns) if columns else np.zeros((len(dataset), 0))

    def transform(self, dataset: Dataset, stats: Optional[PredictionStats] = None) -> np.ndarray:
        columns = []
        for feature in self.schema:
            if feature.kind is not FeatureKind.CATEGORICAL:
                columns.append(_numeric(dataset, feature.name))
                continue
            table = self.statistics[feature.name]
            raw = dataset.frame[feature.name]
            if stats is not None:
                stats.unknown_levels += int((~raw.isin(list(table))).sum())
            columns.append(np.array([table.get(v, self.prior) for v in raw], dtype=float))
        return np.column_stack(columns) if columns else np.zeros((len(dataset), 0))

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "prior": self.prior, "strength": self.strength, "statistics": self.statistics}


def encoding_for(algorithm: Algorithm, schema: Sequence[FeatureSpec]):
    """Boosted trees consume ordered target statistics, everything else one-hot columns."""
    if algorithm is Algorithm.GRADIENT_BOOSTED_TREES:
        return OrderedTargetEncoding(schema)
    return OneHotEncoding(schema)


def encoding_from_dict(schema: Sequence[FeatureSpec], data: Dict[str, Any]):
    if data["kind"] == OrderedTargetEncoding.kind:
        return OrderedTargetEncoding(schema, data["prior"], data["strength"], data["statistics"])
    return OneHotEncoding(schema, data["levels"])


@dataclass
class ModelArtifact:
    """A trained model with everything needed to predict and audit it."""

    algorithm: Algorithm
    task: Task
    hyperparameters: Dict[str, Any]
    class_weights: Dict[str, float]
    train_seed: int
    schema: List[FeatureSpec]
    schema_fingerprint: str
    encoder: Dict[str, Any]
    parameters: Dict[str, Any]
    training_metrics: Dict[str, Any] = field(default_factory=dict)
    format_version: int = ARTIFACT_FORMAT_VERSION
    _runtime: Optional[Tuple[Any, Any]] = field(default=None, init=False, repr=False, compare=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "format_version": self.format_version,
            "algorithm": self.algorithm.value,
            "task": self.task.value,
            "hyperparameters": self.hyperparameters,
            "class_weights": self.class_weights,
            "train_seed": self.train_seed,
            "schema": [[f.name, f.kind.value] for f in self.schema],
            "schema_fingerprint": self.schema_fingerprint,
            "encoder": self.encoder,
            "parameters": self.parameters,
            "training_metrics": self.training_metrics,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ModelArtifact":
        if data.get("format_version") != ARTIFACT_FORMAT_VERSION:
            raise TrainingError(
                f"unsupported model artifact version {data.get('format_version')}",
                {"expected": ARTIFACT_FORMAT_VERSION},
            )
        return cls(
            algorithm=Algorithm(data["algorithm"]),
            task=Task(data["task"]),
            hyperparameters=data["hyperparameters"],
            class_weights=data["class_weights"],
            train_seed=data["train_seed"],
            schema=[FeatureSpec(name, FeatureKind(kind)) for name, kind in data["schema"]],
            schema_fingerprint=data["schema_fingerprint"],
            encoder=data["encoder"],
            parameters=data["parameters"],
            training_metrics=data.get("training_metrics", {}),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ModelArtifact":
        return cls.from_dict(json.loads(text))

    def save(self, path):
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ModelArtifact":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    def runtime(self):
        """(encoding, estimator) rebuilt from the serialized parameters."""
        if self._runtime is None:
            encoding = encoding_from_dict(self.schema, self.encoder)
            estimator = EstimatorFactory.restore(self.algorithm, self.task, self.hyperparameters, self.parameters)
            self._runtime = (encoding, estimator)
        return self._runtime

    def feature_importances(self) -> Optional[List[Tuple[str, float]]]:
        """Normalized importance per schema feature, highest first; None for linear models."""
        raw = self.parameters.get("importances")
        if raw is None:
            return None
        encoding, _ = self.runtime()
        totals = {f.name: 0.0 for f in self.schema}
        for name, weight in zip(encoding.column_features, raw):
            totals[name] += weight
        grand = math.fsum(totals.values())
        if grand > 0:
            totals = {name: weight / grand for name, weight in totals.items()}
        return sorted(totals.items(), key=lambda item: (-item[1], item[0]))


def _check_schema(m: ModelArtifact, rows: Dataset):
    if rows.fingerprint != m.schema_fingerprint:
        raise SchemaMismatchError(
            "rows were built with a different feature schema than the model",
            {"model": m.schema_fingerprint, "rows": rows.fingerprint,
             "model_features": [f.name for f in m.schema], "row_features": rows.feature_names},
        )


def _predict(m: ModelArtifact, rows: Dataset, stats: Optional[PredictionStats]) -> np.ndarray:
    _check_schema(m, rows)
    encoding, estimator = m.runtime()
    local = PredictionStats()
    output = estimator.predict(encoding.transform(rows, local))
    if local.unknown_levels:
        logger.warning(f"   ✗ {local.unknown_levels} unseen categorical values routed to {UNKNOWN_LEVEL}")
    if stats is not None:
        stats.unknown_levels += local.unknown_levels
    return output


def predict_proba(m: ModelArtifact, rows: Dataset, stats: Optional[PredictionStats] = None) -> np.ndarray:
    """Class-1 probability per row."""
    if m.task is not Task.CLASSIFY:
        raise TrainingError("predict_proba needs a classification model", {"task": m.task.value})
    return np.clip(_predict(m, rows, stats), 0.0, 1.0)


def predict_values(m: ModelArtifact, rows: Dataset, stats: Optional[PredictionStats] = None) -> np.ndarray:
    if m.task is not Task.REGRESS:
        raise TrainingError("predict_values needs a regression model", {"task": m.task.value})
    return _predict(m, rows, stats)


def _check_strata(labels: np.ndarray):
    classes, counts = np.unique(labels, return_counts=True)
    small = {str(c): int(n) for c, n in zip(classes, counts) if n < 2}
    if small:
        raise DatasetError(f"cannot stratify: classes with fewer than 2 rows: {small}", {"classes": small})


def stratified_split(d: Dataset, test_fraction: float = 0.3, seed: int = 0,
                     strata: Optional[np.ndarray] = None) -> Tuple[Dataset, Dataset]:
    """Train/test split preserving the proportion of every class (or stratum).

    Both parts keep the original row order.
    """
    if len(d) == 0:
        raise DatasetError("cannot split an empty dataset")
    labels = d.target if strata is None else np.asarray(strata)
    _check_strata(labels)
    try:
        train_idx, test_idx = train_test_split(
            np.arange(len(d)), test_size=test_fraction, stratify=labels, random_state=seed)
    except ValueError as e:
        raise DatasetError(f"cannot stratify {len(d)} rows with test fraction {test_fraction}: {e}") from e
    return d.subset(np.sort(train_idx)), d.subset(np.sort(test_idx))


def random_split(d: Dataset, test_fraction: float = 0.3, seed: int = 0) -> Tuple[Dataset, Dataset]:
    if len(d) < 2:
        raise DatasetError(f"cannot split {len(d)} row(s)")
    train_idx, test_idx = train_test_split(np.arange(len(d)), test_size=test_fraction, random_state=seed)
    return d.subset(np.sort(train_idx)), d.subset(np.sort(test_idx))


def sample_weights(target: np.ndarray, class_weights: Dict[str, float]) -> np.ndarray:
    if not class_weights:
        return np.ones(len(target))
    return np.where(target == 1, class_weights["1"], class_weights["0"])


def fit_artifact(algorithm: Algorithm, task: Task, train: Dataset, hyperparameters: Dict[str, Any],
                 class_weights: Dict[str, float], seed: int, jobs: int = 1) -> ModelArtifact:
    """Fit one grid cell on the whole of `train`."""
    algorithm, task = Algorithm(algorithm), Task(task)
    encoding = encoding_for(algorithm, train.schema)
    X = encoding.fit_transform(train, seed)
    estimator = EstimatorFactory.create(algorithm, task, hyperparameters, jobs)
    estimator.fit(X, train.target, sample_weights(train.target, class_weights), seed)
    return ModelArtifact(
        algorithm=algorithm,
        task=task,
        hyperparameters=dict(hyperparameters),
        class_weights=dict(class_weights),
        train_seed=seed,
        schema=list(train.schema),
        schema_fingerprint=train.fingerprint,
        encoder=encoding.to_dict(),
        parameters=estimator.to_params(),
    )


def _grid_cells(grid: Optional[Dict[str, Sequence[Any]]]) -> List[Dict[str, Any]]:
    if not grid or any(len(list(values)) == 0 for values in grid.values()):
        raise TrainingError("hyperparameter grid is empty", {"grid": grid})
    return list(ParameterGrid({k: list(v) for k, v in grid.items()}))


def selection_score(m: ModelArtifact, valid: Dataset, metric: str) -> float:
    """Validation score where larger is better (errors are negated)."""
    if metric in CLASSIFICATION_METRICS:
        predicted = (predict_proba(m, valid) >= 0.5).astype(int)
        _, recall, f1, _ = precision_recall_fscore_support(
            valid.target.astype(int), predicted, labels=[0, 1], average="weighted", zero_division=0)
        return float(f1 if metric == "f1_weighted" else recall)
    predicted = predict_values(m, valid)
    if metric == "mae":
        return -float(mean_absolute_error(valid.target, predicted))
    return -math.sqrt(mean_squared_error(valid.target, predicted))


@dataclass
class GridSearchResult:
    best_params: Dict[str, Any]
    best_score: float
    cells: List[Dict[str, Any]]


def grid_search(algorithm: Algorithm, task: Task, train: Dataset, grid: Dict[str, Sequence[Any]],
                class_weights: Dict[str, float], seed: int, selection_metric: str,
                jobs: int = 1) -> GridSearchResult:
    """Score every grid cell on an 80/20 inner split of `train`; the first best cell wins."""
    cells = _grid_cells(grid)
    if Task(task) is Task.CLASSIFY:
        try:
            inner, valid = stratified_split(train, 0.2, seed)
        except DatasetError as e:
            raise TrainingError(f"cannot build the validation fold: {e.message}", e.details) from e
    else:
        inner, valid = random_split(train, 0.2, seed)

    def _score(params):
        m = fit_artifact(algorithm, task, inner, params, class_weights, seed)
        return selection_score(m, valid, selection_metric)

    scores = Parallel(n_jobs=jobs, prefer="threads")(delayed(_score)(p) for p in cells)
    best = int(np.argmax(scores))
    return GridSearchResult(
        best_params=cells[best],
        best_score=float(scores[best]),
        cells=[{"params": p, "score": float(s)} for p, s in zip(cells, scores)],
    )


def _finish_training(m: ModelArtifact, search: GridSearchResult, selection_metric: str, train: Dataset):
    m.training_metrics = {
        "selection_metric": selection_metric,
        "validation_score": search.best_score,
        "grid": search.cells,
        "train_rows": len(train),
    }
    if m.task is Task.CLASSIFY:
        m.training_metrics["train_prevalence"] = train.prevalence
    importances = m.feature_importances()
    if importances is not None:
        m.training_metrics["feature_importances"] = [[n, w] for n, w in importances]


def train_classifier(algorithm: Algorithm, train: Dataset, class_weights: Optional[Dict[Any, float]],
                     grid: Dict[str, Sequence[Any]], seed: int, selection_metric: str = "f1_weighted",
                     jobs: int = 1) -> ModelArtifact:
    """Grid-search and fit a binary classifier.

    Args:
        algorithm: Learner to fit.
        train: Training split with a 0/1 target.
        class_weights: Sample weight per class. None gives class 0 a weight equal
            to the positive prevalence of `train` and class 1 a weight of 1.
        grid: Hyperparameter values scored on a stratified 80/20 inner split.
        seed: Seed for the inner split and the learner.
        selection_metric: Key of CLASSIFICATION_METRICS used to pick the grid cell.
        jobs: Worker threads for the search and forest fitting.

    Returns:
        The fitted ModelArtifact with its search summary and training metrics.

    Raises:
        TrainingError: On an unknown metric, a non-binary or single-class target,
            non-positive class weights, or an empty grid.
    """
    algorithm = Algorithm(algorithm)
    if selection_metric not in CLASSIFICATION_METRICS:
        raise TrainingError(f"unknown selection metric '{selection_metric}'",
                            {"allowed": list(CLASSIFICATION_METRICS)})
    if not train.is_binary():
        raise TrainingError("classification target must be 0/1")
    classes = np.unique(train.target)
    if classes.size < 2:
        raise TrainingError(f"training data has a single class ({classes.tolist()})",
                            {"rows": len(train)})

    if class_weights is None:
        class_weights = {0: train.prevalence, 1: 1.0}
    weights = {str(int(k)): float(v) for k, v in class_weights.items()}
    if set(weights) != {"0", "1"} or min(weights.values()) <= 0:
        raise TrainingError("class weights must give a positive weight to classes 0 and 1",
                            {"class_weights": weights})

    logger.info(f"   ✓ {algorithm.value}: {len(train)} rows, prevalence {train.prevalence:.3f}, "
                f"class-0 weight {weights['0']:.3f}")
    search = grid_search(algorithm, Task.CLASSIFY, train, grid, weights, seed, selection_metric, jobs)
    m = fit_artifact(algorithm, Task.CLASSIFY, train, search.best_params, weights, seed, jobs)
    _finish_training(m, search, selection_metric, train)
    return m


def train_regressor(algorithm: Algorithm, train: Dataset, grid: Dict[str, Sequence[Any]], seed: int,
                    selection_metric: str = "mae", jobs: int = 1) -> ModelArtifact:
    algorithm = Algorithm(algorithm)
    if algorithm is Algorithm.LOGISTIC_REGRESSION:
        raise TrainingError("logistic regression is not available for regression",
                            {"algorithm": algorithm.value})
    if selection_metric not in REGRESSION_METRICS:
        raise TrainingError(f"unknown selection metric '{selection_metric}'",
                            {"allowed": list(REGRESSION_METRICS)})
    if len(train) < 2:
        raise TrainingError(f"need at least 2 training rows, got {len(train)}")

    logger.info(f"   ✓ {algorithm.value}: {len(train)} rows")
    search = grid_search(algorithm, Task.REGRESS, train, grid, {}, seed, selection_metric, jobs)
    m = fit_artifact(algorithm, Task.REGRESS, train, search.best_params, {}, seed, jobs)
    _finish_training(m, search, selection_metric, train)
    return m


@dataclass
class ClassificationReport:
    f1_weighted: float
    precision_weighted: float
    recall_weighted: float
    auc: Optional[float]
    pr_curve: List[Tuple[float, float, float]]
    confusion: List[List[int]]
    n_rows: int
    prevalence: float

    def to_dict(self, include_curve: bool = False) -> Dict[str, Any]:
        data = {
            "f1_weighted": self.f1_weighted,
            "precision_weighted": self.precision_weighted,
            "recall_weighted": self.recall_weighted,
            "auc": self.auc,
            "confusion": self.confusion,
            "n_rows": self.n_rows,
            "prevalence": self.prevalence,
        }
        if include_curve:
            data["pr_curve"] = [list(point) for point in self.pr_curve]
        return data


def classification_report(y_true, scores) -> ClassificationReport:
    """Weighted point metrics at threshold 0.5, ROC AUC and the PR curve.

    AUC and the curve are None/empty when only one class is present.
    """
    y = np.asarray(y_true).astype(int)
    scores = np.asarray(scores, dtype=float)
    if y.size == 0:
        raise DatasetError("cannot evaluate on an empty test set")

    predicted = (scores >= 0.5).astype(int)
    precision, recall, f1, _ = precision_recall_fscore_support(
        y, predicted, labels=[0, 1], average="weighted", zero_division=0)
    confusion = confusion_matrix(y, predicted, labels=[0, 1])

    auc, curve = None, []
    if np.unique(y).size == 2:
        auc = float(roc_auc_score(y, scores))
        curve_precision, curve_recall, thresholds = precision_recall_curve(y, scores)
        curve = [(float(curve_recall[i]), float(curve_precision[i]), float(thresholds[i]))
                 for i in range(thresholds.size)]

    return ClassificationReport(
        f1_weighted=float(f1),
        precision_weighted=float(precision),
        recall_weighted=float(recall),
        auc=auc,
        pr_curve=curve,
        confusion=confusion.tolist(),
        n_rows=int(y.size),
        prevalence=float(np.mean(y == 1)),
    )


def evaluate_classifier(m: ModelArtifact, test: Dataset) -> ClassificationReport:
    return classification_report(test.target, predict_proba(m, test))


@dataclass
class RegressionReport:
    rmse: float
    mae: float
    feature_importances: List[Tuple[str, float]]
    n_rows: int

    def importance_rank(self, feature_name: str) -> Optional[int]:
        """1-based rank of a feature by importance, None when unknown."""
        for rank, (name, _) in enumerate(self.feature_importances, start=1):
            if name == feature_name:
                return rank
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rmse": self.rmse,
            "mae": self.mae,
            "feature_importances": [[n, w] for n, w in self.feature_importances],
            "n_rows": self.n_rows,
        }


def regression_report(y_true, y_pred, importances: Optional[List[Tuple[str, float]]] = None) -> RegressionReport:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.size == 0:
        raise DatasetError("cannot evaluate on an empty test set")
    return RegressionReport(
        rmse=math.sqrt(mean_squared_error(y_true, y_pred)),
        mae=float(mean_absolute_error(y_true, y_pred)),
        feature_importances=list(importances or []),
        n_rows=int(y_true.size),
    )


def evaluate_regressor(m: ModelArtifact, test: Dataset) -> RegressionReport:
    return regression_report(test.target, predict_values(m, test), m.feature_importances())


@dataclass
class ModelComparison:
    """Every candidate family trained on the same split, plus the persisted one."""

    models: Dict[str, ModelArtifact]
    reports: Dict[str, Any]
    primary: str

    @property
    def primary_model(self) -> ModelArtifact:
        return self.models[self.primary]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "primary": self.primary,
            "models": {
                name: {
                    "hyperparameters": self.models[name].hyperparameters,
                    "metrics": report.to_dict(),
                }
                for name, report in self.reports.items()
            },
        }


def compare_classifiers(algorithms: Sequence[Algorithm], primary: Algorithm, train: Dataset, test: Dataset,
                        grids: Dict[str, Dict[str, Sequence[Any]]], class_weights, seed: int,
                        selection_metric: str = "f1_weighted", jobs: int = 1) -> ModelComparison:
    models, reports = {}, {}
    for algorithm in algorithms:
        name = Algorithm(algorithm).value
        models[name] = train_classifier(algorithm, train, class_weights, grids.get(name), seed,
                                        selection_metric, jobs)
        reports[name] = evaluate_classifier(models[name], test)
        logger.info(f"   ✓ {name}: F1w {reports[name].f1_weighted:.3f}, "
                    f"recall_w {reports[name].recall_weighted:.3f}, AUC {reports[name].auc}")
    return ModelComparison(models, reports, Algorithm(primary).value)


def compare_regressors(algorithms: Sequence[Algorithm], primary: Algorithm, train: Dataset, test: Dataset,
                       grids: Dict[str, Dict[str, Sequence[Any]]], seed: int,
                       selection_metric: str = "mae", jobs: int = 1) -> ModelComparison:
    models, reports = {}, {}
    for algorithm in algorithms:
        name = Algorithm(algorithm).value
        models[name] = train_regressor(algorithm, train, grids.get(name), seed, selection_metric, jobs)
        reports[name] = evaluate_regressor(models[name], test)
        logger.info(f"   ✓ {name}: RMSE {reports[name].rmse:.3f}, MAE {reports[name].mae:.3f}")
    return ModelComparison(models, reports, Algorithm(primary).value)
