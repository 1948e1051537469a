"""Command-line entry point.

Exit codes: 0 success, 2 config error, 3 runtime error, 4 resume refusal.
Failures print one line to stderr: ``error: <category>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .checkpoint import ResumeError
from .colony import ColonyError, PersistenceError
from .config import ConfigError, load_config, parse_config
from .datasets import DatasetError
from .space import DecodeError
from .runner import CONFIG_FILE, evaluate_candidate, run_search

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_RESUME = 0, 2, 3, 4


def _print_summary(summary: dict, quiet: bool):
    if quiet:
        return
    best = summary["best"]
    print(f"status: {summary['status']}  iterations: {summary['iterations']}  evaluations: {summary['evaluations']}")
    print(f"best candidate: {best['candidate']}")
    print(f"best objective: {best['objective']!r}  fitness: {best['fitness']!r}")
    metrics = {k: v for k, v in best["metrics"].items() if not k.endswith("_curve")}
    if metrics:
        print(f"metrics: {json.dumps(metrics, sort_keys=True)}")
    if "full_train" in summary:
        ft = {k: v for k, v in summary["full_train"]["metrics"].items() if not k.endswith("_curve")}
        print(f"full training: {json.dumps(ft, sort_keys=True)}")


def cmd_run(args) -> int:
    cfg = load_config(args.config, seed=args.seed, output_dir=args.out)
    _print_summary(run_search(cfg), args.quiet)
    return EXIT_OK


def cmd_resume(args) -> int:
    if args.config is None and args.out is None:
        raise ConfigError("resume needs --out DIR (or --config PATH)")
    if args.config is not None:
        cfg = load_config(args.config, seed=args.seed, output_dir=args.out)
    else:
        snapshot = Path(args.out) / CONFIG_FILE
        if not snapshot.exists():
            raise ResumeError(f"no resolved config at {snapshot}")
        cfg = load_config(snapshot, seed=args.seed, output_dir=args.out)
    _print_summary(run_search(cfg, resume=True), args.quiet)
    return EXIT_OK


def cmd_benchmark(args) -> int:
    if args.config is not None:
        cfg = load_config(args.config, seed=args.seed, output_dir=args.out)
        if cfg.mode != "benchmark":
            raise ConfigError("mode: benchmark subcommand requires mode 'benchmark'")
    else:
        bench = {"function": args.function, "dimension": args.dimension}
        if args.lower is not None:
            bench["lower"] = args.lower
        if args.upper is not None:
            bench["upper"] = args.upper
        colony = {
            "num_food_sources": args.food_sources,
            "abandonment_limit": args.limit,
            "iterations": args.iterations,
            "seed": args.seed or 0,
        }
        if args.onlookers is not None:
            colony["num_onlookers"] = args.onlookers
        cfg = parse_config(
            {"mode": "benchmark", "benchmark": bench, "colony": colony, "output_dir": args.out or "runs/benchmark"}
        )
    _print_summary(run_search(cfg), args.quiet)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config, seed=args.seed)
    result = evaluate_candidate(cfg, args.candidate)
    if not args.quiet:
        print(json.dumps(result, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abcnas", description="Artificial Bee Colony search")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=False):
        p.add_argument("--config", required=config_required, help="YAML run configuration")
        p.add_argument("--seed", type=int, help="override colony.seed")
        p.add_argument("--out", help="override output_dir")
        p.add_argument("--quiet", action="store_true")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("run", help="search, then fully train the winner (nas mode)")
    common(p, config_required=True)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("resume", help="continue an interrupted run from its checkpoint")
    common(p)
    p.set_defaults(func=cmd_resume)

    p = sub.add_parser("benchmark", help="run the colony on a numerical benchmark")
    common(p)
    p.add_argument("function", nargs="?", default="sphere", choices=["sphere", "rosenbrock", "rastrigin"])
    p.add_argument("--dimension", type=int, default=10)
    p.add_argument("--lower", type=float)
    p.add_argument("--upper", type=float)
    p.add_argument("--food-sources", type=int, default=10)
    p.add_argument("--onlookers", type=int)
    p.add_argument("--limit", type=int, default=25)
    p.add_argument("--iterations", type=int, default=200)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("evaluate", help="evaluate one candidate given by its encoding")
    common(p, config_required=True)
    p.add_argument("candidate", help="canonical encoding, e.g. 'conv3x32|maxpool2|dense64'")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.ERROR if args.quiet else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - every failure maps to one exit line
        category, code = classify(exc)
        if isinstance(exc, PersistenceError) and exc.best is not None:
            print(f"best so far: objective {exc.best.objective!r}", file=sys.stderr)
        message = " ".join(str(exc).split()) or type(exc).__name__
        print(f"error: {category}: {message}", file=sys.stderr)
        return code


def classify(exc: BaseException) -> tuple[str, int]:
    if isinstance(exc, (ConfigError, DatasetError, DecodeError)):
        return "config", EXIT_CONFIG
    if isinstance(exc, ResumeError):
        return "resume", EXIT_RESUME
    if isinstance(exc, PersistenceError):
        return "persistence", EXIT_RUNTIME
    return "runtime", EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
