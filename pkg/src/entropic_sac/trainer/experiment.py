"""Paired over-exploration experiment: corrected vs. missing-target backup.

Two trainings that differ only in the backup variant, with target entropy 0.5
and initial temperature 1, share a seed. The summary compares the final third
of each run.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .. import plotting
from .config import RunConfig
from .loop import TrainResult, train
from .metrics import MetricsRow, mean_or_none

FIG1_TARGET_ENTROPY = 0.5
FIG1_ALPHA0 = 1.0
ENTROPY_BAND = 0.25
VARIANT_ORDER = ("corrected", "missing_target")


def thread_cap() -> int:
    env = os.environ.get("ENTROPIC_SAC_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, min(2, os.cpu_count() or 1))


def final_third(rows: list[MetricsRow], total_steps: int) -> list[MetricsRow]:
    cut = total_steps - total_steps // 3
    return [r for r in rows if r.env_step > cut]


def summarize_run(rows: list[MetricsRow], total_steps: int, target_entropy: float) -> dict:
    tail = final_third(rows, total_steps)
    evals = [r for r in rows if r.eval_return_mean is not None]
    entropy = mean_or_none(r.mean_batch_entropy for r in tail)
    return {
        "final_third_mean_alpha": mean_or_none(r.alpha for r in tail),
        "final_third_mean_log_alpha": mean_or_none(r.log_alpha for r in tail),
        "final_third_mean_batch_entropy": entropy,
        "final_third_entropy_minus_target": None if entropy is None else entropy - target_entropy,
        "final_eval_return_mean": evals[-1].eval_return_mean if evals else None,
        "final_eval_return_std": evals[-1].eval_return_std if evals else None,
        "rows_in_final_third": len(tail),
    }


def fig1_configs(base: RunConfig) -> dict[str, RunConfig]:
    common = {"target_entropy": FIG1_TARGET_ENTROPY, "alpha0": FIG1_ALPHA0}
    return {v: base.model_copy(update={**common, "variant": v}) for v in VARIANT_ORDER}


def fig1_experiment(base: RunConfig, out_dir: str | Path | None = None,
                    max_workers: int | None = None) -> dict:
    """Run both variants and write ``summary.json`` and ``alpha_comparison.svg``."""
    configs = fig1_configs(base)
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    def job(variant: str) -> TrainResult:
        return train(configs[variant], out / variant if out is not None else None)

    workers = max_workers or thread_cap()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=min(workers, 2)) as pool:
            results = dict(zip(VARIANT_ORDER, pool.map(job, VARIANT_ORDER)))
    else:
        results = {v: job(v) for v in VARIANT_ORDER}

    runs = {v: summarize_run(results[v].rows, base.total_steps, FIG1_TARGET_ENTROPY) for v in VARIANT_ORDER}
    c, m = runs["corrected"], runs["missing_target"]
    summary = {
        "target_entropy": FIG1_TARGET_ENTROPY,
        "alpha0": FIG1_ALPHA0,
        "seed": base.seed,
        "total_steps": base.total_steps,
        "runs": runs,
        "corrected_entropy_within_band": (
            c["final_third_entropy_minus_target"] is not None
            and abs(c["final_third_entropy_minus_target"]) <= ENTROPY_BAND),
        "entropy_band": ENTROPY_BAND,
        "missing_target_alpha_exceeds_corrected": (
            c["final_third_mean_alpha"] is not None and m["final_third_mean_alpha"] is not None
            and m["final_third_mean_alpha"] > c["final_third_mean_alpha"]),
    }
    if out is not None:
        (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
        plotting.plot_metrics(plotting.ChartSpec(
            plotting.series_from_runs([out / v for v in VARIANT_ORDER], "alpha"),
            out / "alpha_comparison.svg", y_label="alpha",
            title="temperature: corrected vs. missing_target backup"))
    return summary
