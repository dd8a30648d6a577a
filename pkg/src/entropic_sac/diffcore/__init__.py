"""Minimal dense reverse-mode autodiff, MLPs and optimizers."""
from . import tensor
from .checkpoint import load, save
from .nn import ParamTree, forward_mlp, init_mlp
from .optim import OptimizerState, adam, optimizer_step, sgd
from .tensor import Graph, Tensor, backward

__all__ = [
    "Graph", "OptimizerState", "ParamTree", "Tensor", "adam", "backward",
    "forward_mlp", "init_mlp", "load", "optimizer_step", "save", "sgd", "tensor",
]
