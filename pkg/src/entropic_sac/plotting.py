"""Dependency-free SVG line charts for metrics CSVs."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

from .errors import ConfigError
from .trainer.metrics import read_metrics

WIDTH, HEIGHT = 720, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 170, 40, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


@dataclass
class Series:
    label: str
    xs: list[float]
    ys: list[float]


@dataclass
class ChartSpec:
    series: list[Series]
    output: Path
    x_label: str = "env_step"
    y_label: str = "alpha"
    title: str = ""
    columns: list[str] = field(default_factory=list)


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    span = hi - lo
    step = span / n
    mag = 10 ** math.floor(math.log10(step))
    for m in (1, 2, 2.5, 5, 10):
        if m * mag >= step:
            step = m * mag
            break
    start = math.ceil(lo / step) * step
    ticks, v = [], start
    while v <= hi + 1e-12 * abs(step):
        ticks.append(round(v, 12))
        v += step
    return ticks


def _range(values: list[float]) -> tuple[float, float]:
    lo, hi = min(values), max(values)
    if hi == lo:
        pad = abs(lo) * 0.1 or 1.0
        return lo - pad, hi + pad
    pad = (hi - lo) * 0.05
    return lo - pad, hi + pad


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def render_svg(spec: ChartSpec) -> str:
    pts = [(x, y) for s in spec.series for x, y in zip(s.xs, s.ys)]
    if not pts:
        raise ConfigError(f"nothing to plot for {spec.output}")
    x0, x1 = _range([p[0] for p in pts])
    y0, y1 = _range([p[1] for p in pts])
    pw, ph = WIDTH - MARGIN_L - MARGIN_R, HEIGHT - MARGIN_T - MARGIN_B

    def sx(x):
        return MARGIN_L + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return MARGIN_T + ph - (y - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>']
    if spec.title:
        out.append(f'<text x="{WIDTH / 2:.2f}" y="22" text-anchor="middle" font-size="14">{escape(spec.title)}</text>')
    out.append(f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>')
    for t in _nice_ticks(x0, x1):
        out.append(f'<line x1="{sx(t):.2f}" y1="{MARGIN_T + ph}" x2="{sx(t):.2f}" y2="{MARGIN_T + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{MARGIN_T + ph + 18}" text-anchor="middle">{_fmt(t)}</text>')
    for t in _nice_ticks(y0, y1):
        out.append(f'<line x1="{MARGIN_L - 5}" y1="{sy(t):.2f}" x2="{MARGIN_L}" y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN_L - 8}" y="{sy(t) + 4:.2f}" text-anchor="end">{_fmt(t)}</text>')
    out.append(f'<text x="{MARGIN_L + pw / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle">{escape(spec.x_label)}</text>')
    out.append(f'<text x="16" y="{MARGIN_T + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {MARGIN_T + ph / 2:.2f})">{escape(spec.y_label)}</text>')
    for i, s in enumerate(spec.series):
        color = COLORS[i % len(COLORS)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(s.xs, s.ys))
        if len(s.xs) == 1:
            out.append(f'<circle cx="{sx(s.xs[0]):.2f}" cy="{sy(s.ys[0]):.2f}" r="3" fill="{color}"/>')
        elif s.xs:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        ly = MARGIN_T + 14 + 18 * i
        lx = MARGIN_L + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}" class="legend">{escape(s.label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_metrics(spec: ChartSpec) -> Path:
    spec.output.write_text(render_svg(spec))
    return spec.output


def run_label(run_dir: Path) -> str:
    """Directory name, with the backup variant appended when it differs."""
    try:
        variant = json.loads((run_dir / "config.json").read_text()).get("variant")
    except (OSError, json.JSONDecodeError):
        variant = None
    if variant is None or variant == run_dir.name:
        return run_dir.name
    return f"{run_dir.name} ({variant})"


def series_from_runs(run_dirs: list[Path], column: str, x_column: str = "env_step") -> list[Series]:
    series = []
    for d in run_dirs:
        path = d / "metrics.csv"
        rows = read_metrics(path)
        if not rows:
            raise ConfigError(f"metrics file {path} has no rows")
        if column not in rows[0]:
            raise ConfigError(f"column {column!r} not in {path}")
        xy = [(r[x_column], r[column]) for r in rows if r[column] is not None]
        series.append(Series(run_label(d), [p[0] for p in xy], [p[1] for p in xy]))
    return series


def find_runs(path: Path) -> list[Path]:
    """A run directory itself, or the run directories directly beneath it."""
    if (path / "metrics.csv").exists():
        return [path]
    runs = sorted(p for p in path.iterdir() if (p / "metrics.csv").exists()) if path.is_dir() else []
    if not runs:
        raise ConfigError(f"no metrics.csv under {path}")
    return runs
