"""Versioned JSON checkpoints for ParamTree.

Floats go through ``repr`` so they round-trip exactly; keys are sorted so the
same tree always serializes to the same bytes.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..errors import ConfigError, InputFileError
from .nn import PARAM_TREE_VERSION, ParamTree


def to_document(tree: ParamTree) -> dict:
    return {
        "version": tree.version,
        "params": {
            path: {"shape": list(v.shape), "data": [float(x) for x in v.ravel()]}
            for path, v in tree.items()
        },
    }


def from_document(doc: dict) -> ParamTree:
    if doc.get("version") != PARAM_TREE_VERSION:
        raise ConfigError(f"unsupported checkpoint version {doc.get('version')!r}")
    tree = ParamTree()
    for path, entry in doc["params"].items():
        data = np.asarray(entry["data"], dtype=np.float64)
        shape = tuple(entry["shape"])
        if data.size != int(np.prod(shape, dtype=np.int64)):
            raise ConfigError(f"checkpoint entry {path!r}: shape {shape} does not match data length {data.size}")
        tree[path] = data.reshape(shape)
    return tree


def dumps(tree: ParamTree) -> str:
    return json.dumps(to_document(tree), sort_keys=True)


def save(tree: ParamTree, path: str | Path) -> None:
    Path(path).write_text(dumps(tree) + "\n")


def load(path: str | Path) -> ParamTree:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputFileError(f"cannot read checkpoint {path}: {exc}") from exc
    return from_document(doc)
