#!/usr/bin/env python3
"""
Tests for RunConfig defaults, validation and file precedence
"""

from pathlib import Path

import pytest
from pydantic import ValidationError

from config import RunConfig, load_run_config
from errors import UsageError


def test_defaults():
    config = RunConfig()
    assert (config.seed, config.images_per_class, config.side, config.levels) == (42, 1000, 64, 8)
    assert (config.distance, config.noise_sigma, config.train_fraction) == (1, 0.0, 0.9)
    assert (config.knn_k, config.svm_lambda, config.svm_epochs) == (3, 0.01, 100)
    assert config.output_dir == Path("generated")
    assert config.sweep_seeds == [42]


@pytest.mark.parametrize("field,value", [
    ("levels", 1), ("levels", 257), ("images_per_class", 9), ("train_fraction", 1.0),
    ("knn_k", 0), ("svm_lambda", 0.0), ("side", 4), ("jobs", 0),
])
def test_rejects_out_of_range(field, value):
    with pytest.raises(ValidationError):
        RunConfig(**{field: value})


def test_distance_must_fit_image():
    with pytest.raises(ValidationError):
        RunConfig(side=8, distance=8)


def test_seed_list_parsing():
    config = RunConfig(seed=5, seeds="6, 7,5,6")
    assert config.seeds == [6, 7, 5, 6]
    assert config.sweep_seeds == [5, 6, 7]


def test_precedence(tmp_path):
    env_file = tmp_path / ".env"
    env_file.write_text("GLCMLAB_KNN_K=5\nGLCMLAB_SEED=1\nUNRELATED=x\n")
    config_file = tmp_path / "run.cfg"
    config_file.write_text("# desk run\nseed=2\nsvm-epochs=50\n")

    from_env = load_run_config(env_file=env_file)
    assert (from_env.knn_k, from_env.seed) == (5, 1)

    layered = load_run_config(config_file, {"svm_epochs": 7, "levels": None}, env_file=env_file)
    assert (layered.knn_k, layered.seed, layered.svm_epochs, layered.levels) == (5, 2, 7, 8)


def test_unknown_keys(tmp_path):
    config_file = tmp_path / "run.cfg"
    config_file.write_text("colour=blue\n")
    with pytest.raises(UsageError, match="colour"):
        load_run_config(config_file, env_file=tmp_path / "missing.env")
    with pytest.raises(UsageError):
        load_run_config(tmp_path / "nope.cfg", env_file=tmp_path / "missing.env")
