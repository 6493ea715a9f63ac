#!/usr/bin/env python3
"""
Run configuration and logging setup.

Precedence: built-in defaults < GLCMLAB_* keys in ./.env < --config file
< command-line flags. Config files are key=value lines read with
python-dotenv; keys may be written snake_case or kebab-case.
"""

import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Union

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from errors import UsageError

log = logging.getLogger("CONFIG")

ENV_PREFIX = "GLCMLAB_"
LOG_FORMAT = "[%(name)s] %(message)s"


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    seed: int = Field(42, ge=0, lt=2**64)
    images_per_class: int = Field(1000, ge=10)
    side: int = Field(64, ge=8)
    levels: int = Field(8, ge=2, le=256)
    distance: int = Field(1, ge=1)
    noise_sigma: float = Field(0.0, ge=0.0)
    train_fraction: float = Field(0.9, gt=0.0, lt=1.0)
    knn_k: int = Field(3, ge=1)
    svm_lambda: float = Field(0.01, gt=0.0)
    svm_epochs: int = Field(100, ge=1)
    output_dir: Path = Path("generated")
    jobs: int = Field(1, ge=1)
    seeds: List[int] = Field(default_factory=list)
    save_models: bool = False

    @field_validator("seeds", mode="before")
    @classmethod
    def _split_seed_list(cls, value):
        if isinstance(value, str):
            return [int(part) for part in value.replace(" ", "").split(",") if part]
        return value

    @model_validator(mode="after")
    def _check_distance(self):
        if self.distance >= self.side:
            raise ValueError(f"distance {self.distance} leaves no pixel pairs on a {self.side}px image")
        return self

    @property
    def sweep_seeds(self) -> List[int]:
        """The base seed followed by any extra seeds, without repeats"""
        ordered = [self.seed] + [s for s in self.seeds if s != self.seed]
        return list(dict.fromkeys(ordered))


def _normalize_keys(values: Mapping[str, Any], source: str) -> Dict[str, Any]:
    known = set(RunConfig.model_fields)
    normalized = {}
    for key, value in values.items():
        name = key.strip().lower().replace("-", "_")
        if name not in known:
            raise UsageError(f"unknown config key '{key}' in {source}; known keys: {', '.join(sorted(known))}")
        normalized[name] = value
    return normalized


def load_run_config(config_file: Optional[Union[str, Path]] = None,
                    overrides: Optional[Mapping[str, Any]] = None,
                    env_file: Union[str, Path] = ".env") -> RunConfig:
    values: Dict[str, Any] = {}

    env_path = Path(env_file)
    if env_path.is_file():
        prefixed = {
            key[len(ENV_PREFIX):]: value
            for key, value in dotenv_values(env_path).items()
            if key.upper().startswith(ENV_PREFIX)
        }
        values.update(_normalize_keys(prefixed, str(env_path)))

    if config_file is not None:
        config_path = Path(config_file)
        if not config_path.is_file():
            raise UsageError(f"config file not found: {config_path}")
        values.update(_normalize_keys(dotenv_values(config_path), str(config_path)))

    if overrides:
        values.update({key: value for key, value in overrides.items() if value is not None})

    return RunConfig(**values)


def configure_logging(verbose: bool = False) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


def log_effective_config(config: RunConfig) -> None:
    log.info("Effective configuration:")
    for key, value in config.model_dump().items():
        log.info(f"   {key} = {value}")
