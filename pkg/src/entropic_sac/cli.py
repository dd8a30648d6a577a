"""``entropic-sac`` command line: train, eval, verify, fig1, plot.

Exit codes: 0 success, 1 usage or unreadable input file, 2 validation or
numeric failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import plotting
from .errors import EntropicSacError, InputFileError
from .tabular import load_mdp, random_mdp, verify_duality_report
from .trainer.config import DEFAULTS, load_config_document, save_config, validate
from .trainer.experiment import fig1_experiment
from .trainer.loop import evaluate, load_run, train

log = logging.getLogger("entropic_sac")

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit with status 2
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="entropic-sac", description="Entropy-constrained soft actor-critic experiments.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    t = sub.add_parser("train", help="train one agent")
    t.add_argument("--config", type=Path, help="JSON run config (fields not given take defaults)")
    t.add_argument("--seed", type=int)
    t.add_argument("--variant", choices=["corrected", "missing_target"])
    t.add_argument("--target-entropy", type=float)
    t.add_argument("--alpha0", type=float)
    t.add_argument("--steps", type=int)
    t.add_argument("--allow-infeasible-target", action="store_true", default=None,
                   help="warn instead of failing when the target entropy exceeds log|A|")
    t.add_argument("--out", type=Path, default=Path("runs/train"))

    e = sub.add_parser("eval", help="evaluate a run's final checkpoint with the mean action")
    e.add_argument("--run", type=Path, required=True)
    e.add_argument("--episodes", type=int, default=10)
    e.add_argument("--seed", type=int, default=0)

    v = sub.add_parser("verify", help="tabular strong-duality report")
    v.add_argument("--mdp", default="random", help="MDP JSON path, or 'random'")
    v.add_argument("--h0", type=float, default=0.3, help="target entropy (nats)")
    v.add_argument("--grid", type=int, default=201, help="grid points per simplex edge")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--states", type=int, default=2)
    v.add_argument("--actions", type=int, default=2)
    v.add_argument("--horizon", type=int, default=2)
    v.add_argument("--out", type=Path, help="write the report here instead of stdout")

    f = sub.add_parser("fig1", help="paired corrected / missing_target runs (H0=0.5, alpha0=1)")
    f.add_argument("--out", type=Path, required=True)
    f.add_argument("--seed", type=int)
    f.add_argument("--steps", type=int)
    f.add_argument("--config", type=Path, help="base run config")

    pl = sub.add_parser("plot", help="SVG line chart(s) from metrics.csv")
    pl.add_argument("--run", type=Path, required=True, help="run directory or a directory of runs")
    pl.add_argument("--columns", nargs="+", default=["alpha"])
    pl.add_argument("--out", type=Path, help="output SVG (one file per column)")
    return p


def _resolve_config(config_path: Path | None, overrides: dict):
    doc = dict(DEFAULTS)
    if config_path is not None:
        doc.update(load_config_document(config_path))
    doc.update({k: v for k, v in overrides.items() if v is not None})
    return validate(doc)


def cmd_train(args) -> int:
    config = _resolve_config(args.config, {
        "seed": args.seed, "variant": args.variant, "target_entropy": args.target_entropy,
        "alpha0": args.alpha0, "total_steps": args.steps,
        "allow_infeasible_target": args.allow_infeasible_target})
    result = train(config, args.out)
    evals = [r for r in result.rows if r.eval_return_mean is not None]
    print(json.dumps({"run_dir": str(args.out), "env_steps": config.total_steps,
                      "final_alpha": result.rows[-1].alpha if result.rows else config.alpha0,
                      "final_eval_return_mean": evals[-1].eval_return_mean if evals else None}))
    return EXIT_OK


def cmd_eval(args) -> int:
    if args.episodes < 1:
        raise UsageError("eval: --episodes must be at least 1")
    config, params = load_run(args.run)
    stats = evaluate(params, config.env_id, args.episodes, args.seed)
    print(json.dumps(stats.to_document(), indent=2))
    return EXIT_OK


def cmd_verify(args) -> int:
    if args.mdp == "random":
        mdp = random_mdp(np.random.default_rng(args.seed), args.states, args.actions, args.horizon)
    else:
        mdp = load_mdp(args.mdp)
    report = verify_duality_report(mdp, args.h0, args.grid)
    report["mdp"] = mdp.to_document()
    text = json.dumps(report, indent=2)
    if args.out is not None:
        args.out.write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_fig1(args) -> int:
    base = _resolve_config(args.config, {"seed": args.seed, "total_steps": args.steps})
    summary = fig1_experiment(base, args.out)
    save_config(base, args.out / "base_config.json")
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_plot(args) -> int:
    runs = plotting.find_runs(args.run)
    for col in args.columns:
        if args.out is None:
            out = args.run / f"{col}.svg"
        elif len(args.columns) == 1:
            out = args.out
        else:
            out = args.out.with_name(f"{args.out.stem}_{col}{args.out.suffix or '.svg'}")
        plotting.plot_metrics(plotting.ChartSpec(plotting.series_from_runs(runs, col), out,
                                                 y_label=col, columns=[col]))
        print(out)
    return EXIT_OK


COMMANDS = {"train": cmd_train, "eval": cmd_eval, "verify": cmd_verify, "fig1": cmd_fig1, "plot": cmd_plot}


def run_cli(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_help())
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return EXIT_USAGE
    except InputFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EntropicSacError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def main() -> None:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
