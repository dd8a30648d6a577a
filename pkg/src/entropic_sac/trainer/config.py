"""Run configuration schema.

The trainer only accepts complete configs: every field is required here and
defaults live in :data:`DEFAULTS`, which the CLI merges in before validation.
That keeps each persisted ``config.json`` self-describing.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ..envsim import ENV_ID, RNG_ALGORITHM
from ..errors import ConfigError, InputFileError

DEFAULTS: dict = {
    "env_id": ENV_ID,
    "variant": "corrected",
    "target_entropy": -1.0,
    "alpha0": 1.0,
    "seed": 0,
    "total_steps": 150_000,
    "warmup_steps": 1000,
    "batch_size": 256,
    "buffer_capacity": 100_000,
    "updates_per_step": 1,
    "gamma": 0.99,
    "tau": 0.005,
    "actor_lr": 3e-4,
    "critic_lr": 3e-4,
    "alpha_lr": 1e-3,
    "temperature_weight_decay": 0.0,
    "adam_betas": [0.9, 0.999],
    "adam_eps": 1e-8,
    "hidden_sizes": [64, 64],
    "log_interval": 1000,
    "eval_interval": 10_000,
    "eval_episodes": 10,
    "checkpoint_interval": 10_000,
    "allow_infeasible_target": False,
    "rng_algorithm": RNG_ALGORITHM,
}


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    env_id: Literal["pendulum-v1-local"]
    variant: Literal["corrected", "missing_target"]
    target_entropy: float
    alpha0: float = Field(gt=0)
    seed: int = Field(ge=0)
    total_steps: int = Field(ge=0)
    warmup_steps: int = Field(ge=0)
    batch_size: int = Field(gt=0)
    buffer_capacity: int = Field(gt=0)
    updates_per_step: Literal[1]
    gamma: float = Field(gt=0, le=1)
    tau: float = Field(gt=0, le=1)
    actor_lr: float = Field(gt=0)
    critic_lr: float = Field(gt=0)
    alpha_lr: float = Field(gt=0)
    temperature_weight_decay: float
    adam_betas: tuple[float, float]
    adam_eps: float = Field(gt=0)
    hidden_sizes: tuple[int, ...] = Field(min_length=1)
    log_interval: int = Field(gt=0)
    eval_interval: int = Field(ge=0)
    eval_episodes: int = Field(ge=1)
    checkpoint_interval: int = Field(ge=0)
    allow_infeasible_target: bool
    rng_algorithm: Literal["PCG64"]

    @field_validator("temperature_weight_decay")
    @classmethod
    def _zero_decay(cls, v: float) -> float:
        # the temperature must move only with the sign of the entropy gap
        if v != 0.0:
            raise ValueError("temperature weight decay must be exactly 0")
        return v

    @field_validator("hidden_sizes")
    @classmethod
    def _positive_widths(cls, v):
        if any(w <= 0 for w in v):
            raise ValueError("hidden layer widths must be positive")
        return v

    def to_document(self) -> dict:
        doc = self.model_dump(mode="json")
        return {k: doc[k] for k in sorted(doc)}


def validate(doc: dict) -> RunConfig:
    try:
        return RunConfig.model_validate(doc)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in e['loc']) or '<root>'}: {e['msg']}" for e in exc.errors())
        raise ConfigError(f"invalid run config: {problems}") from exc


def make_config(**overrides) -> RunConfig:
    """DEFAULTS with ``overrides`` applied; unknown keys are rejected."""
    return validate({**DEFAULTS, **overrides})


def load_config_document(path: str | Path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise InputFileError(f"config file not found: {path}") from exc
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFileError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return doc


def save_config(config: RunConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(config.to_document(), indent=2, sort_keys=True) + "\n")
