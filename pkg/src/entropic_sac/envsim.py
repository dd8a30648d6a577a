"""In-repo pendulum swing-up task with the classic-control constants."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ContractError

ENV_ID = "pendulum-v1-local"
RNG_ALGORITHM = "PCG64"

GRAVITY = 10.0
MASS = 1.0
LENGTH = 1.0
DT = 0.05
MAX_SPEED = 8.0
MAX_TORQUE = 2.0
TIME_LIMIT = 200


@dataclass(frozen=True)
class ActionSpace:
    low: np.ndarray
    high: np.ndarray

    def __post_init__(self) -> None:
        if not (np.asarray(self.low) < np.asarray(self.high)).all():
            raise ConfigError("action space needs low < high in every dimension")

    @property
    def dim(self) -> int:
        return len(self.low)

    @property
    def volume(self) -> float:
        return float(np.prod(np.asarray(self.high) - np.asarray(self.low)))

    @property
    def log_volume(self) -> float:
        """log|A|: the entropy of the uniform distribution, an upper bound on policy entropy."""
        return float(np.sum(np.log(np.asarray(self.high) - np.asarray(self.low))))


@dataclass(frozen=True)
class PendulumState:
    theta: float
    theta_dot: float
    step_index: int = 0

    @property
    def observation(self) -> np.ndarray:
        return np.array([math.cos(self.theta), math.sin(self.theta), self.theta_dot])


def wrap_angle(x: float) -> float:
    return ((x + math.pi) % (2.0 * math.pi)) - math.pi


def reward_of(theta: float, theta_dot: float, u: float) -> float:
    th = wrap_angle(theta)
    return -(th * th + 0.1 * theta_dot * theta_dot + 0.001 * u * u)


def step_state(state: PendulumState, action: float) -> tuple[PendulumState, float]:
    """Pure dynamics: returns (next state, reward of the entry state)."""
    if not math.isfinite(action):
        raise ContractError(f"non-finite action {action!r}")
    u = min(max(action, -MAX_TORQUE), MAX_TORQUE)
    th, thdot = state.theta, state.theta_dot
    reward = reward_of(th, thdot, u)
    thdot = thdot + (3.0 * GRAVITY / (2.0 * LENGTH) * math.sin(th) + 3.0 / (MASS * LENGTH ** 2) * u) * DT
    thdot = min(max(thdot, -MAX_SPEED), MAX_SPEED)
    th = th + thdot * DT
    return PendulumState(th, thdot, state.step_index + 1), reward


class Pendulum:
    """One environment instance with its own random stream."""

    env_id = ENV_ID
    observation_dim = 3
    action_space = ActionSpace(np.array([-MAX_TORQUE]), np.array([MAX_TORQUE]))

    def __init__(self, rng: np.random.Generator):
        self.rng = rng
        self.state: PendulumState | None = None

    def reset(self) -> np.ndarray:
        self.state = PendulumState(float(self.rng.uniform(-math.pi, math.pi)),
                                   float(self.rng.uniform(-1.0, 1.0)), 0)
        return self.state.observation

    def step(self, action) -> tuple[np.ndarray, float, bool, bool]:
        """Returns (observation, reward, terminal, truncated); never terminal."""
        if self.state is None:
            raise ContractError("step() called before reset()")
        a = float(np.asarray(action, dtype=np.float64).reshape(-1)[0])
        self.state, reward = step_state(self.state, a)
        return self.state.observation, reward, False, self.state.step_index >= TIME_LIMIT


def make_env(env_id: str, rng: np.random.Generator) -> Pendulum:
    if env_id != ENV_ID:
        raise ConfigError(f"unknown env id {env_id!r}; only {ENV_ID!r} is available")
    return Pendulum(rng)


def write_trajectory_csv(path: str | Path, rows) -> None:
    """rows: iterable of (step, theta, theta_dot, action, reward)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "theta", "theta_dot", "action", "reward"])
        for row in rows:
            w.writerow([repr(x) if isinstance(x, float) else x for x in row])
