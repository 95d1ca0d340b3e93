"""Tests for layered configuration loading."""

import json

import pytest

from config import load_config
from errors import ConfigError


def test_shipped_defaults_load():
    config = load_config(env={})
    assert config.run.seed == 42
    assert config.run.test_fraction == 0.3
    assert config.competitions == [(55, 43)]
    assert set(config.grids) == {"decision_tree", "gradient_boosted_trees", "logistic_regression", "random_forest"}
    assert config.class0_weight("xg") is None
    assert config.source_files == ["pipeline_defaults.toml"]


def test_precedence_env_then_file_then_flags(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text("[run]\nseed = 8\n", encoding="utf-8")

    assert load_config(env={"PIPELINE_SEED": "7"}).run.seed == 7
    assert load_config(str(path), env={"PIPELINE_SEED": "7"}).run.seed == 8
    config = load_config(str(path), {"run": {"seed": 9}}, env={"PIPELINE_SEED": "7"})
    assert config.run.seed == 9
    assert config.source_files == ["pipeline_defaults.toml", str(path)]


def test_environment_paths(tmp_path):
    config = load_config(env={"STATSBOMB_DATA_ROOT": "/data/sb", "KAGGLE_DATA_DIR": str(tmp_path),
                              "LOG_LEVEL": "debug"})
    assert config.data.statsbomb_root == "/data/sb"
    assert config.data.valuations_path == tmp_path / "player_valuations.csv"
    assert config.run.log_level == "DEBUG"


def test_every_problem_is_reported_at_once(tmp_path):
    path = tmp_path / "bad.toml"
    path.write_text(
        "[run]\nseed = -1\nbogus = 1\ntest_fraction = 1.5\n"
        "[models]\nxg_primary = \"svm\"\n"
        "[nonsense]\nx = 1\n",
        encoding="utf-8",
    )
    with pytest.raises(ConfigError) as excinfo:
        load_config(str(path), env={"PIPELINE_SEED": "abc"})
    problems = excinfo.value.details["problems"]
    joined = "\n".join(problems)
    assert "PIPELINE_SEED must be an integer" in joined
    assert "unknown section [nonsense]" in joined
    assert "unknown key run.bogus" in joined
    assert "run.seed: must be >= 0" in joined
    assert "run.test_fraction" in joined
    assert "models.xg_primary" in joined
    assert len(problems) >= 6


def test_wrong_types_and_grids_are_rejected():
    with pytest.raises(ConfigError) as excinfo:
        load_config(overrides={
            "run": {"jobs": 0},
            "flags": {"exclude_penalties": "yes"},
            "grids": {"random_forest": {"n_trees": []}, "svm": {"c": [1]}},
        }, env={})
    joined = "\n".join(excinfo.value.details["problems"])
    assert "run.jobs" in joined
    assert "flags.exclude_penalties: expected bool" in joined
    assert "grids.random_forest.n_trees: must be a non-empty list" in joined
    assert "grids.svm: unknown algorithm" in joined


def test_inverted_window_is_rejected():
    with pytest.raises(ConfigError, match="problem"):
        load_config(overrides={"window": {"start": "2021-07-11", "end": "2021-06-11"}}, env={})


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(str(tmp_path / "absent.toml"), env={})


def test_json_config_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"grids": {"decision_tree": {"max_depth": [2]}}, "team": {"min_games": 1}}))
    config = load_config(str(path), env={})
    assert config.grids["decision_tree"] == {"max_depth": [2]}
    assert config.grids["random_forest"]["n_trees"] == [100, 300]
    assert config.team.min_games == 1


def test_class0_weight_override():
    config = load_config(overrides={"models": {"xg_class0_weight": 2}}, env={})
    assert config.class0_weight("xg") == {0: 2.0, 1: 1.0}
    assert config.class0_weight("scorer") is None


def test_config_hash_ignores_execution_settings():
    base = load_config(env={})
    assert base.config_hash() == load_config(env={}).config_hash()
    moved = load_config(overrides={"run": {"jobs": 4, "out_dir": "elsewhere", "log_level": "DEBUG"}}, env={})
    assert moved.config_hash() == base.config_hash()
    reseeded = load_config(overrides={"run": {"seed": 43}}, env={})
    assert reseeded.config_hash() != base.config_hash()


def test_stage_seeds_are_stable_and_distinct():
    config = load_config(env={})
    assert config.stage_seed("xg_train") == load_config(env={}).stage_seed("xg_train")
    assert config.stage_seed("xg_train") != config.stage_seed("scorer_train")
    assert 0 <= config.stage_seed("transfer_split") < 2 ** 31
