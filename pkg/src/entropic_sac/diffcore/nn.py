"""Parameter trees and multi-layer perceptrons on top of the tape."""
from __future__ import annotations

from typing import Iterator, Mapping, Sequence

import numpy as np

from ..errors import ConfigError, NumericError
from . import tensor as T
from .tensor import Graph, Tensor

PARAM_TREE_VERSION = 1

ACTIVATIONS = {"relu": T.relu, "tanh": T.tanh, "identity": lambda x: x}


class ParamTree:
    """Ordered map ``path -> float64 array``; iteration is lexicographic."""

    def __init__(self, entries: Mapping[str, np.ndarray] | None = None, version: int = PARAM_TREE_VERSION):
        self.version = version
        self._entries: dict[str, np.ndarray] = {}
        for path, value in (entries or {}).items():
            self[path] = value

    def __setitem__(self, path: str, value) -> None:
        self._entries[path] = np.array(value, dtype=np.float64)

    def __getitem__(self, path: str) -> np.ndarray:
        return self._entries[path]

    def __contains__(self, path: str) -> bool:
        return path in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[str]:
        return iter(sorted(self._entries))

    def keys(self) -> list[str]:
        return sorted(self._entries)

    def items(self) -> list[tuple[str, np.ndarray]]:
        return [(k, self._entries[k]) for k in sorted(self._entries)]

    def subtree(self, prefix: str) -> "ParamTree":
        """Entries under ``prefix`` (arrays shared, not copied)."""
        sub = ParamTree(version=self.version)
        for k, v in self._entries.items():
            if k.startswith(prefix):
                sub._entries[k] = v
        return sub

    def update(self, other: "ParamTree | Mapping[str, np.ndarray]") -> None:
        for k, v in other.items():
            self[k] = v

    def copy(self) -> "ParamTree":
        return ParamTree({k: v.copy() for k, v in self._entries.items()}, self.version)

    def equal(self, other: "ParamTree") -> bool:
        return self.keys() == other.keys() and all(
            np.array_equal(self[k], other[k]) for k in self.keys())


def layer_paths(prefix: str, i: int) -> tuple[str, str]:
    return f"{prefix}/layer{i}/weight", f"{prefix}/layer{i}/bias"


def init_mlp(tree: ParamTree, prefix: str, sizes: Sequence[int], rng: np.random.Generator) -> None:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) init for weights and biases."""
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        bound = 1.0 / np.sqrt(fan_in)
        w, b = layer_paths(prefix, i)
        tree[w] = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        tree[b] = rng.uniform(-bound, bound, size=(fan_out,))


def n_layers(params: Mapping, prefix: str) -> int:
    i = 0
    while layer_paths(prefix, i)[0] in params:
        i += 1
    if i == 0:
        raise ConfigError(f"no layers found under {prefix!r}")
    return i


def forward_mlp(params: Mapping, prefix: str, x, activations: Sequence[str] | str) -> Tensor:
    """Run the MLP stored under ``prefix``.

    ``params`` maps paths to Tensors (recorded) or arrays (constants).
    ``activations`` is one name per layer, or one name for hidden layers with
    identity on the output layer.
    """
    depth = n_layers(params, prefix)
    if isinstance(activations, str):
        activations = [activations] * (depth - 1) + ["identity"]
    if len(activations) != depth:
        raise ConfigError(f"{prefix}: {depth} layers but {len(activations)} activations")
    h = T.as_tensor(x)
    for i, act in enumerate(activations):
        w_path, b_path = layer_paths(prefix, i)
        w, b = T.as_tensor(params[w_path]), T.as_tensor(params[b_path])
        if h.shape[-1] != w.shape[0]:
            raise ConfigError(f"{prefix}/layer{i}: input width {h.shape[-1]} != {w.shape[0]}")
        if act not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {act!r}")
        h = ACTIVATIONS[act](T.linear(h, w, b))
        if not np.isfinite(h.data).all():
            raise NumericError(f"non-finite output at {prefix}/layer{i}")
    return h


def register(graph: Graph, tree: ParamTree, prefix: str) -> dict[str, Tensor]:
    return graph.params_from(tree, prefix)
