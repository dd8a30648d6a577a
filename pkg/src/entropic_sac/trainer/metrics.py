"""Metrics rows and their CSV form."""
from __future__ import annotations

import csv
import math
from dataclasses import astuple, dataclass, fields
from pathlib import Path

from ..errors import InputFileError


@dataclass(frozen=True)
class MetricsRow:
    env_step: int
    episode_return: float | None
    alpha: float
    log_alpha: float
    mean_batch_entropy: float | None
    critic_loss: float | None
    actor_loss: float | None
    temperature_loss: float | None
    eval_return_mean: float | None = None
    eval_return_std: float | None = None


# header order: env_step,episode_return,alpha,...,eval_return_std
COLUMNS = tuple(f.name for f in fields(MetricsRow))


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


class MetricsWriter:
    """Appends rows to ``metrics.csv`` as they arrive (flushed per row)."""

    def __init__(self, path: str | Path | None):
        self.rows: list[MetricsRow] = []
        self._fh = None
        if path is not None:
            self._fh = open(path, "w", newline="")
            self._writer = csv.writer(self._fh)
            self._writer.writerow(COLUMNS)
            self._fh.flush()

    def write(self, row: MetricsRow) -> None:
        if self.rows and row.env_step < self.rows[-1].env_step:
            raise ValueError("metrics rows must have non-decreasing env_step")
        self.rows.append(row)
        if self._fh is not None:
            self._writer.writerow([_fmt(v) for v in astuple(row)])
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


def read_metrics(path: str | Path) -> list[dict[str, float | None]]:
    """Parse a metrics CSV; empty cells become None."""
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            rows = [{k: (float(v) if v not in ("", None) else None) for k, v in r.items()} for r in reader]
    except OSError as exc:
        raise InputFileError(f"cannot read metrics file {path}: {exc}") from exc
    return rows


def mean_or_none(values) -> float | None:
    vals = [v for v in values if v is not None and not math.isnan(v)]
    return sum(vals) / len(vals) if vals else None
