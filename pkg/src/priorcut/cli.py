"""Command-line interface.

Subcommands
-----------
run        execute a noise-sweep experiment from a JSON config
summarize  print the per-(noise level, method) mean table of a records CSV
verify     run the built-in invariant suite

Exit codes: 0 success, 1 invalid config (or failed verification), 2 solver
failure in at least one trial under ``--strict``, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from priorcut import __version__
from priorcut.harness import load_config, read_records_csv, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_IO = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="priorcut",
        description="Phase retrieval with von Mises phase priors: experiment harness.")
    parser.add_argument("--version", action="version", version=f"priorcut {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a noise-sweep experiment")
    run_p.add_argument("--config", required=True, help="JSON experiment config")
    run_p.add_argument("--out", default=None, help="records CSV path (overrides config)")
    run_p.add_argument("--threads", type=int, default=1, help="worker processes")
    run_p.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
    run_p.add_argument("--strict", action="store_true",
                       help="exit 2 if any trial failed to converge")

    sum_p = sub.add_parser("summarize", help="print mean correlations of a records CSV")
    sum_p.add_argument("csv_path", help="records CSV produced by 'priorcut run'")

    ver_p = sub.add_parser("verify", help="run the built-in invariant suite")
    ver_p.add_argument("--seed", type=int, default=0)
    return parser


def _print_summary(rows: list[dict]) -> None:
    print(f"{'sigma_n_sq':>12}  {'method':<20} {'mean_corr':>10} {'std':>10} {'n':>5}")
    for row in rows:
        print(f"{row['sigma_n_sq']:>12.4g}  {row['method']:<20} "
              f"{row['mean_correlation']:>10.4f} {row['std_correlation']:>10.4f} "
              f"{row['n_trials']:>5d}")


def _cmd_run(args) -> int:
    try:
        config = load_config(args.config, out=args.out, seed=args.seed)
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        records, summary = run_experiment(config, threads=args.threads)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    _print_summary(summary)
    print(f"wrote {len(records)} records to {config.output_path}")
    if args.strict and any(not r.converged for r in records):
        bad = sum(not r.converged for r in records)
        print(f"error: {bad} trial record(s) did not converge", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _cmd_summarize(args) -> int:
    try:
        records = read_records_csv(args.csv_path)
    except OSError as exc:
        print(f"error: cannot read {args.csv_path}: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        print(f"error: malformed records CSV: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    grid = sorted({r.sigma_n_sq for r in records})
    methods = []
    for r in records:
        if r.method not in methods:
            methods.append(r.method)
    rows = []
    for sigma in grid:
        for method in methods:
            corrs = np.array([r.correlation for r in records
                              if r.sigma_n_sq == sigma and r.method == method])
            if corrs.size:
                rows.append({"sigma_n_sq": sigma, "method": method,
                             "mean_correlation": float(np.mean(corrs)),
                             "std_correlation": float(np.std(corrs)),
                             "n_trials": int(corrs.size)})
    _print_summary(rows)
    return EXIT_OK


def _cmd_verify(args) -> int:
    from priorcut.verify import run_all

    return EXIT_OK if run_all(seed=args.seed) else EXIT_CONFIG


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "summarize":
        return _cmd_summarize(args)
    return _cmd_verify(args)


if __name__ == "__main__":
    sys.exit(main())
