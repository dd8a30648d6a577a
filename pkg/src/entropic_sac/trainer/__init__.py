"""Replay, training loop, evaluation and the paired backup experiment."""
from .config import DEFAULTS, RunConfig, make_config
from .experiment import fig1_experiment
from .loop import EvalStats, TrainResult, evaluate, load_run, train
from .metrics import COLUMNS, MetricsRow, read_metrics
from .replay import ReplayBuffer

__all__ = [
    "COLUMNS", "DEFAULTS", "EvalStats", "MetricsRow", "ReplayBuffer", "RunConfig", "TrainResult",
    "evaluate", "fig1_experiment", "load_run", "make_config", "read_metrics", "train",
]
