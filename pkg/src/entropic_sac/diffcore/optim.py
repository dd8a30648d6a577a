"""Plain SGD and bias-corrected Adam acting in place on a ParamTree."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..errors import ContractError
from .nn import ParamTree


@dataclass
class OptimizerState:
    kind: str
    lr: float
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.0
    step_count: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in ("adam", "sgd"):
            raise ContractError(f"unknown optimizer kind {self.kind!r}")


def sgd(lr: float, weight_decay: float = 0.0) -> OptimizerState:
    return OptimizerState("sgd", lr, weight_decay=weight_decay)


def adam(params: ParamTree, lr: float = 3e-4, betas=(0.9, 0.999), eps: float = 1e-8,
         weight_decay: float = 0.0, prefix: str = "") -> OptimizerState:
    state = OptimizerState("adam", lr, tuple(betas), eps, weight_decay)
    for path, p in params.items():
        if path.startswith(prefix):
            state.m[path] = np.zeros_like(p)
            state.v[path] = np.zeros_like(p)
    return state


def optimizer_step(state: OptimizerState, params: ParamTree, grads: Mapping[str, np.ndarray]) -> ParamTree:
    """Apply one update for every path in ``grads``; returns ``params`` (mutated)."""
    state.step_count += 1
    if state.kind == "sgd":
        for path, g in grads.items():
            p = params[path]
            if state.weight_decay:
                g = g + state.weight_decay * p
            params[path] = p - state.lr * g
        return params

    b1, b2 = state.betas
    c1 = 1.0 - b1 ** state.step_count
    c2 = 1.0 - b2 ** state.step_count
    for path, g in grads.items():
        if path not in state.m:
            raise ContractError(f"adam has no moment buffers for {path!r}")
        p = params[path]
        if state.weight_decay:
            g = g + state.weight_decay * p
        m = state.m[path]
        v = state.v[path]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        params[path] = p - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params
