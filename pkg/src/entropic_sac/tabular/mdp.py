"""Finite-horizon tabular MDPs and their JSON interchange format."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ConfigError, ContractError, InputFileError

PROB_TOL = 1e-12


@dataclass(frozen=True)
class FiniteMdp:
    """``transition[s, a, s']``, ``reward[s, a]``, horizon ``T`` (steps 0..T)."""

    transition: np.ndarray
    reward: np.ndarray
    initial_dist: np.ndarray
    horizon: int

    def __post_init__(self) -> None:
        p = np.asarray(self.transition, dtype=np.float64)
        r = np.asarray(self.reward, dtype=np.float64)
        d0 = np.asarray(self.initial_dist, dtype=np.float64)
        object.__setattr__(self, "transition", p)
        object.__setattr__(self, "reward", r)
        object.__setattr__(self, "initial_dist", d0)
        if p.ndim != 3 or p.shape[0] != p.shape[2]:
            raise ConfigError(f"transition must be [S, A, S], got shape {p.shape}")
        if r.shape != p.shape[:2]:
            raise ConfigError(f"reward must be [S, A] = {p.shape[:2]}, got {r.shape}")
        if d0.shape != (p.shape[0],):
            raise ConfigError(f"initial_dist must have length {p.shape[0]}, got {d0.shape}")
        if int(self.horizon) != self.horizon or self.horizon < 0:
            raise ConfigError(f"horizon must be a non-negative integer, got {self.horizon}")
        if (p < 0).any() or np.abs(p.sum(axis=2) - 1.0).max() > PROB_TOL:
            raise ConfigError("each transition[s, a, :] must be a probability vector")
        if (d0 < 0).any() or abs(d0.sum() - 1.0) > PROB_TOL:
            raise ConfigError("initial_dist must be a probability vector")
        if not np.isfinite(r).all():
            raise ConfigError("rewards must be finite")

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[1]

    def to_document(self) -> dict:
        return {
            "n_states": self.n_states,
            "n_actions": self.n_actions,
            "horizon": int(self.horizon),
            "transition": self.transition.tolist(),
            "reward": self.reward.tolist(),
            "initial_dist": self.initial_dist.tolist(),
        }

    @classmethod
    def from_document(cls, doc: dict) -> "FiniteMdp":
        missing = {"n_states", "n_actions", "horizon", "transition", "reward", "initial_dist"} - set(doc)
        if missing:
            raise ConfigError(f"MDP document missing fields: {sorted(missing)}")
        mdp = cls(np.asarray(doc["transition"]), np.asarray(doc["reward"]),
                  np.asarray(doc["initial_dist"]), int(doc["horizon"]))
        if (mdp.n_states, mdp.n_actions) != (doc["n_states"], doc["n_actions"]):
            raise ConfigError("n_states/n_actions disagree with array shapes")
        return mdp


def load_mdp(path: str | Path) -> FiniteMdp:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFileError(f"cannot read MDP file {path}: {exc}") from exc
    return FiniteMdp.from_document(doc)


def random_mdp(rng: np.random.Generator, n_states: int = 2, n_actions: int = 2,
               horizon: int = 2) -> FiniteMdp:
    """Dirichlet(1) transitions and start distribution, Uniform(0, 1) rewards."""
    p = rng.dirichlet(np.ones(n_states), size=(n_states, n_actions))
    r = rng.uniform(0.0, 1.0, size=(n_states, n_actions))
    d0 = rng.dirichlet(np.ones(n_states))
    # renormalize so sums pass the 1e-12 check regardless of rounding
    p /= p.sum(axis=2, keepdims=True)
    d0 /= d0.sum()
    return FiniteMdp(p, r, d0, horizon)


def check_policy(mdp: FiniteMdp, policy: np.ndarray) -> np.ndarray:
    """Validate a policy table ``policy[t, s, a]`` against ``mdp``."""
    policy = np.asarray(policy, dtype=np.float64)
    expected = (mdp.horizon + 1, mdp.n_states, mdp.n_actions)
    if policy.shape != expected:
        raise ContractError(f"policy shape {policy.shape} does not match MDP {expected}")
    if (policy < 0).any() or np.abs(policy.sum(axis=2) - 1.0).max() > PROB_TOL:
        raise ContractError("each policy[t, s, :] must be a probability vector")
    return policy


def uniform_policy(mdp: FiniteMdp) -> np.ndarray:
    return np.full((mdp.horizon + 1, mdp.n_states, mdp.n_actions), 1.0 / mdp.n_actions)
