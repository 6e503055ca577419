"""Command-line entry point ``rep-sim``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import scenarios
from .checks import ALL as CHECKS
from .checks import run_checks
from .errors import ConfigurationError, REPError
from .harness import configs_from_document, load_config, plot_rows, read_results, run_experiment, write_results

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_REGRESSION = 0, 1, 2, 3


def _configs(ref: str):
    if Path(ref).is_file():
        return load_config(ref)
    if ref in scenarios.names():
        return configs_from_document(scenarios.load(ref), name=ref)
    raise ConfigurationError(f"{ref!r} is neither a config file nor a bundled scenario ({', '.join(scenarios.names())})")


def cmd_run(args) -> int:
    configs = _configs(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.workers is not None:
        overrides["workers"] = args.workers
    configs = [c.replace(**overrides) for c in configs] if overrides else configs
    results = [run_experiment(c) for c in configs]
    for res in results:
        parts = []
        for key, agg in sorted(res.aggregate.items()):
            if key in ("bytes", "messages"):
                continue
            mean = "DNF" if agg["mean"] is None else f"{agg['mean']:.3f}"
            std = "" if agg["std"] is None else f" ± {agg['std']:.3f}"
            dnf = f" ({agg['dnf']} DNF)" if agg["dnf"] else ""
            parts.append(f"{key}={mean}{std}{dnf}")
        print(f"{res.name}: " + ", ".join(parts))
    if args.out:
        path = write_results(results, args.out, args.format)
        print(f"wrote {path}")
    return EXIT_OK


def cmd_scenarios(args) -> int:
    if args.action == "list":
        for name in scenarios.names():
            print(f"{name:16s} {scenarios.load(name).get('description', '')}")
    else:
        if not args.name:
            raise ConfigurationError("scenarios show needs a scenario name")
        print(json.dumps(scenarios.load(args.name), indent=2))
    return EXIT_OK


def cmd_plot_data(args) -> int:
    try:
        doc = read_results(args.input)
    except OSError as exc:
        raise ConfigurationError(f"cannot read {args.input}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{args.input} is not a results file: {exc.msg}") from None
    rows = plot_rows(doc, args.metric)
    if not rows:
        raise ConfigurationError(f"metric {args.metric!r} does not occur in {args.input}")
    out = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(["experiment", "trial", "seed", "round", args.metric])
        writer.writerows(rows)
    finally:
        if args.out:
            out.close()
    return EXIT_OK


def cmd_check(args) -> int:
    results = run_checks(args.only, args.trials)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_REGRESSION


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rep-sim", description="Run sensitivity-sharing coordination experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log warnings and progress")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config or bundled scenario")
    run.add_argument("--config", required=True, help="config file path or bundled scenario name")
    run.add_argument("--out", help="write results to this path")
    run.add_argument("--format", choices=["json", "csv"], default="json")
    run.add_argument("--seed", type=int)
    run.add_argument("--trials", type=int)
    run.add_argument("--workers", type=int)
    run.set_defaults(func=cmd_run)

    sc = sub.add_parser("scenarios", help="list or show bundled scenarios")
    sc.add_argument("action", choices=["list", "show"])
    sc.add_argument("name", nargs="?")
    sc.set_defaults(func=cmd_scenarios)

    plot = sub.add_parser("plot-data", help="emit long-format CSV of one metric from a JSON results file")
    plot.add_argument("--in", dest="input", required=True)
    plot.add_argument("--metric", required=True)
    plot.add_argument("--out")
    plot.set_defaults(func=cmd_plot_data)

    check = sub.add_parser("check", help="run directional regression checks (exit 3 on failure)")
    check.add_argument("--only", nargs="+", choices=sorted(CHECKS))
    check.add_argument("--trials", type=int)
    check.set_defaults(func=cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigurationError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return EXIT_CONFIG
    except (REPError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
