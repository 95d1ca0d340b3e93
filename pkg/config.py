"""Layered pipeline configuration.

Precedence, lowest first: `pipeline_defaults.toml`, environment variables,
the `--config` file (TOML or JSON), CLI flags. Every problem found while
validating is reported in a single ConfigError.
"""

import copy
import hashlib
import json
import os

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field
from datetime import date
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

try:
    from .errors import ConfigError
    from .estimators import CLASSIFIERS, REGRESSORS, Algorithm
    from .pitch_geometry import PitchSpec
except ImportError:
    from errors import ConfigError
    from estimators import CLASSIFIERS, REGRESSORS, Algorithm
    from pitch_geometry import PitchSpec


DEFAULTS_PATH = Path(__file__).with_name("pipeline_defaults.toml")

ENVIRONMENT_KEYS = {
    "STATSBOMB_DATA_ROOT": ("data", "statsbomb_root"),
    "KAGGLE_DATA_DIR": ("data", "kaggle_dir"),
    "PIPELINE_OUT_DIR": ("run", "out_dir"),
    "PIPELINE_SEED": ("run", "seed"),
    "LOG_LEVEL": ("run", "log_level"),
}

HYPERPARAMETERS = {
    Algorithm.LOGISTIC_REGRESSION: {"l2", "max_iter", "tol"},
    Algorithm.RANDOM_FOREST: {"n_trees", "max_depth", "min_samples_leaf", "max_features", "max_bins"},
    Algorithm.GRADIENT_BOOSTED_TREES: {"n_trees", "max_depth", "learning_rate", "min_samples_leaf", "max_bins"},
    Algorithm.DECISION_TREE: {"max_depth", "min_samples_leaf", "max_bins"},
}
LOG_LEVELS = ("TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL")

# Settings that change how a run executes but not what it produces.
EXECUTION_ONLY = {("run", "out_dir"), ("run", "jobs"), ("run", "log_level")}


@dataclass
class DataConfig:
    statsbomb_root: str
    kaggle_dir: str
    valuations_file: str
    players_file: str
    link_overrides: str

    @property
    def valuations_path(self) -> Path:
        return Path(self.kaggle_dir) / self.valuations_file

    @property
    def players_path(self) -> Path:
        return Path(self.kaggle_dir) / self.players_file


@dataclass
class RunConfig:
    out_dir: str
    seed: int
    test_fraction: float
    jobs: int
    log_level: str


@dataclass
class ModelConfig:
    xg_primary: str
    scorer_primary: str
    transfer_primary: str
    classification_metric: str
    regression_metric: str
    xg_class0_weight: Optional[float] = None
    scorer_class0_weight: Optional[float] = None


@dataclass
class FlagConfig:
    legacy_distance_formula: bool
    ablate_leakage_feature: bool
    suppress_shooter_delta: bool
    exclude_penalties: bool


@dataclass
class WindowConfig:
    start: str
    end: str


@dataclass
class TeamConfig:
    min_games: int
    allowlist: List[str]


@dataclass
class ReportConfig:
    players: List[str]


@dataclass
class PipelineConfig:
    data: DataConfig
    run: RunConfig
    competitions: List[Tuple[int, int]]
    models: ModelConfig
    grids: Dict[str, Dict[str, List[Any]]]
    flags: FlagConfig
    window: WindowConfig
    team: TeamConfig
    report: ReportConfig
    source_files: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data.pop("source_files")
        data["competitions"] = {"filter": [list(pair) for pair in self.competitions]}
        return data

    def config_hash(self) -> str:
        """SHA-256 of everything that can change an output."""
        data = self.to_dict()
        for section, key in EXECUTION_ONLY:
            data[section].pop(key, None)
        canonical = json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def stage_seed(self, stage: str) -> int:
        """Seed of a named random substream derived from the run seed."""
        digest = hashlib.sha256(f"{self.run.seed}:{stage}".encode("utf-8")).hexdigest()
        return int(digest[:8], 16) % (2 ** 31)

    @property
    def pitch(self) -> PitchSpec:
        return PitchSpec(legacy_distance_formula=self.flags.legacy_distance_formula)

    @property
    def out_dir(self) -> Path:
        return Path(self.run.out_dir)

    def window_dates(self) -> Tuple[Optional[date], Optional[date]]:
        start = date.fromisoformat(self.window.start) if self.window.start else None
        end = date.fromisoformat(self.window.end) if self.window.end else None
        return start, end

    def class0_weight(self, stage: str) -> Optional[Dict[int, float]]:
        weight = getattr(self.models, f"{stage}_class0_weight")
        return None if weight is None else {0: weight, 1: 1.0}


def _read_file(path: Path) -> Dict[str, Any]:
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}", {"problems": [f"{path}: not found"]})
    try:
        if path.suffix == ".json":
            data = json.loads(path.read_text(encoding="utf-8"))
        else:
            with path.open("rb") as f:
                data = tomllib.load(f)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"cannot parse {path}: {e}", {"problems": [f"{path}: {e}"]}) from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a table", {"problems": [f"{path}: not a table"]})
    return data


def _merge(base: Dict[str, Any], layer: Mapping[str, Any], problems: List[str], origin: str):
    """Deep-merge `layer` into `base`; unknown top-level sections are problems."""
    for section, values in layer.items():
        if section not in base:
            problems.append(f"{origin}: unknown section [{section}]")
            continue
        if section == "grids":
            if not isinstance(values, dict):
                problems.append(f"{origin}: [grids] must be a table")
                continue
            for algorithm, grid in values.items():
                base["grids"][algorithm] = grid
            continue
        if not isinstance(values, dict):
            problems.append(f"{origin}: [{section}] must be a table")
            continue
        for key, value in values.items():
            if key not in base[section] and not key.endswith("_class0_weight"):
                problems.append(f"{origin}: unknown key {section}.{key}")
                continue
            base[section][key] = value


def _environment_layer(env: Mapping[str, str], problems: List[str]) -> Dict[str, Dict[str, Any]]:
    layer: Dict[str, Dict[str, Any]] = {}
    for variable, (section, key) in ENVIRONMENT_KEYS.items():
        raw = env.get(variable)
        if raw is None or raw == "":
            continue
        value: Any = raw
        if key == "seed":
            try:
                value = int(raw)
            except ValueError:
                problems.append(f"environment: {variable} must be an integer, got {raw!r}")
                continue
        layer.setdefault(section, {})[key] = value
    return layer


def _check_type(problems: List[str], name: str, value: Any, expected) -> bool:
    if expected is float and isinstance(value, int) and not isinstance(value, bool):
        return True
    if expected is int and isinstance(value, bool):
        problems.append(f"{name}: expected int, got {value!r}")
        return False
    if not isinstance(value, expected):
        problems.append(f"{name}: expected {expected.__name__}, got {value!r}")
        return False
    return True


def _validate(raw: Dict[str, Any], problems: List[str]):
    expected_types = {
        "data": {"statsbomb_root": str, "kaggle_dir": str, "valuations_file": str, "players_file": str,
                 "link_overrides": str},
        "run": {"out_dir": str, "seed": int, "test_fraction": float, "jobs": int, "log_level": str},
        "models": {"xg_primary": str, "scorer_primary": str, "transfer_primary": str,
                   "classification_metric": str, "regression_metric": str,
                   "xg_class0_weight": float, "scorer_class0_weight": float},
        "flags": {"legacy_distance_formula": bool, "ablate_leakage_feature": bool,
                  "suppress_shooter_delta": bool, "exclude_penalties": bool},
        "window": {"start": str, "end": str},
        "team": {"min_games": int, "allowlist": list},
        "report": {"players": list},
    }
    valid = set()
    for section, types in expected_types.items():
        for key, value in raw[section].items():
            if key not in types:
                problems.append(f"unknown key {section}.{key}")
            elif _check_type(problems, f"{section}.{key}", value, types[key]):
                valid.add((section, key))

    def ok(section, key):
        return (section, key) in valid

    run, models = raw["run"], raw["models"]
    if ok("run", "seed") and run["seed"] < 0:
        problems.append(f"run.seed: must be >= 0, got {run['seed']}")
    if ok("run", "test_fraction") and not 0 < run["test_fraction"] < 1:
        problems.append(f"run.test_fraction: must lie in (0, 1), got {run['test_fraction']}")
    if ok("run", "jobs") and run["jobs"] == 0:
        problems.append("run.jobs: must be a positive worker count or -1")
    if ok("run", "log_level") and run["log_level"].upper() not in LOG_LEVELS:
        problems.append(f"run.log_level: must be one of {list(LOG_LEVELS)}, got {run['log_level']!r}")

    for key, allowed in (("xg_primary", CLASSIFIERS), ("scorer_primary", CLASSIFIERS),
                         ("transfer_primary", REGRESSORS)):
        if ok("models", key) and models[key] not in {a.value for a in allowed}:
            problems.append(f"models.{key}: must be one of {[a.value for a in allowed]}, got {models[key]!r}")
    if ok("models", "classification_metric") and models["classification_metric"] not in ("f1_weighted", "recall_weighted"):
        problems.append(f"models.classification_metric: unknown metric {models['classification_metric']!r}")
    if ok("models", "regression_metric") and models["regression_metric"] not in ("mae", "rmse"):
        problems.append(f"models.regression_metric: unknown metric {models['regression_metric']!r}")
    for key in ("xg_class0_weight", "scorer_class0_weight"):
        if ok("models", key) and models[key] <= 0:
            problems.append(f"models.{key}: must be positive, got {models[key]}")

    pairs = raw["competitions"].get("filter")
    if (not isinstance(pairs, list) or not pairs
            or not all(isinstance(p, list) and len(p) == 2 and all(type(v) is int for v in p) for p in pairs)):
        problems.append(f"competitions.filter: expected a non-empty list of [competition_id, season_id], got {pairs!r}")
    for key in raw["competitions"]:
        if key != "filter":
            problems.append(f"unknown key competitions.{key}")

    for name, grid in raw["grids"].items():
        try:
            algorithm = Algorithm(name)
        except ValueError:
            problems.append(f"grids.{name}: unknown algorithm")
            continue
        if not isinstance(grid, dict) or not grid:
            problems.append(f"grids.{name}: must be a non-empty table of value lists")
            continue
        for key, values in grid.items():
            if key not in HYPERPARAMETERS[algorithm]:
                problems.append(f"grids.{name}.{key}: unknown hyperparameter")
            elif not isinstance(values, list) or not values:
                problems.append(f"grids.{name}.{key}: must be a non-empty list")

    dates = {}
    for key in ("start", "end"):
        if ok("window", key) and raw["window"][key]:
            try:
                dates[key] = date.fromisoformat(raw["window"][key])
            except ValueError:
                problems.append(f"window.{key}: not an ISO date: {raw['window'][key]!r}")
    if len(dates) == 2 and dates["end"] < dates["start"]:
        problems.append(f"window: end {dates['end']} precedes start {dates['start']}")

    if ok("team", "min_games") and raw["team"]["min_games"] < 1:
        problems.append(f"team.min_games: must be >= 1, got {raw['team']['min_games']}")
    for section, key in (("team", "allowlist"), ("report", "players")):
        if ok(section, key) and not all(isinstance(v, str) for v in raw[section][key]):
            problems.append(f"{section}.{key}: must be a list of strings")


def load_config(config_path: Optional[str] = None, overrides: Optional[Mapping[str, Mapping[str, Any]]] = None,
                env: Optional[Mapping[str, str]] = None) -> PipelineConfig:
    """Resolve and validate the configuration from every layer."""
    env = os.environ if env is None else env
    problems: List[str] = []

    with DEFAULTS_PATH.open("rb") as f:
        raw = tomllib.load(f)
    raw = copy.deepcopy(raw)
    sources = [str(DEFAULTS_PATH.name)]

    _merge(raw, _environment_layer(env, problems), problems, "environment")
    if config_path:
        _merge(raw, _read_file(Path(config_path)), problems, str(config_path))
        sources.append(str(config_path))
    if overrides:
        _merge(raw, {s: dict(v) for s, v in overrides.items() if v}, problems, "command line")

    _validate(raw, problems)
    if problems:
        raise ConfigError(f"invalid configuration ({len(problems)} problem(s))", {"problems": problems})

    run = dict(raw["run"])
    run["log_level"] = run["log_level"].upper()
    run["test_fraction"] = float(run["test_fraction"])
    models = dict(raw["models"])
    for key in ("xg_class0_weight", "scorer_class0_weight"):
        if models.get(key) is not None:
            models[key] = float(models[key])

    return PipelineConfig(
        data=DataConfig(**raw["data"]),
        run=RunConfig(**run),
        competitions=[(int(c), int(s)) for c, s in raw["competitions"]["filter"]],
        models=ModelConfig(**models),
        grids={name: dict(grid) for name, grid in sorted(raw["grids"].items())},
        flags=FlagConfig(**raw["flags"]),
        window=WindowConfig(**raw["window"]),
        team=TeamConfig(min_games=raw["team"]["min_games"], allowlist=list(raw["team"]["allowlist"])),
        report=ReportConfig(players=list(raw["report"]["players"])),
        source_files=sources,
    )
