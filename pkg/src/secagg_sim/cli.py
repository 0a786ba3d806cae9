"""Command line entry point: ``secagg-sim {run,summarize,latency-matrix,selftest}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, EmptyDataset

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_help(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="secagg-sim", description="Simulate secure aggregation protocols.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    run = sub.add_parser("run", help="run an experiment sweep from a YAML config")
    run.add_argument("--config", required=True)
    run.add_argument("--out", help="CSV path (defaults to the config's output setting)")

    summ = sub.add_parser("summarize", help="per-cell mean and standard error of a results CSV")
    summ.add_argument("--in", dest="inp", required=True)
    summ.add_argument("--out", help="write the summary here instead of stdout")

    lat = sub.add_parser("latency-matrix", help="sample a latency matrix from an endpoint dataset")
    lat.add_argument("--dataset", help="lat,lon,latency_ms CSV (default: bundled synthetic set)")
    lat.add_argument("--n", type=int, required=True, help="number of clients")
    lat.add_argument("--seed", type=int, default=0)
    lat.add_argument("--out", required=True, help=".npy or .csv output")

    selftest = sub.add_parser("selftest", help="check that every protocol computes exact sums")
    selftest.add_argument("--trials", type=int, default=5)
    return parser


def _run(args) -> int:
    from .experiments import ExperimentConfig, run_experiments

    if not Path(args.config).is_file():
        print(f"config file not found: {args.config}", file=sys.stderr)
        return EXIT_USAGE
    try:
        config = ExperimentConfig.load(args.config)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out or config.output
    if not out:
        print("no output path: pass --out or set 'output' in the config", file=sys.stderr)
        return EXIT_USAGE

    def progress(rec):
        print(
            f"{rec.protocol:>16} n={rec.n_clients:<6} l={rec.dimension:<7} run={rec.run_id} "
            f"{rec.status:<8} {rec.total_time_s:.3f}s"
        )

    records = run_experiments(config, out, progress)
    failed = sum(r.status != "success" for r in records)
    print(f"{len(records)} runs written to {out} ({failed} unsuccessful)")
    return EXIT_OK


def _summarize(args) -> int:
    from .experiments import read_records, summarize, write_summary

    if not Path(args.inp).is_file():
        print(f"results file not found: {args.inp}", file=sys.stderr)
        return EXIT_USAGE
    try:
        rows = summarize(read_records(args.inp))
    except (ValueError, KeyError) as exc:
        print(f"cannot read {args.inp}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            write_summary(rows, fh)
    else:
        write_summary(rows)
    return EXIT_OK


def _latency_matrix(args) -> int:
    from .network import default_dataset_path, empirical_matrix, load_endpoints, save_matrix

    if args.n < 1:
        print("--n must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    dataset = args.dataset or default_dataset_path()
    if not Path(dataset).is_file():
        print(f"dataset not found: {dataset}", file=sys.stderr)
        return EXIT_USAGE
    try:
        samples = load_endpoints(dataset)
    except (EmptyDataset, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_FAIL
    matrix = empirical_matrix(samples, args.n, np.random.default_rng(args.seed))
    save_matrix(matrix, args.out)
    print(f"wrote {args.n + 1}x{args.n + 1} one-way delays (ns) to {args.out}")
    return EXIT_OK


def selftest(trials: int = 5, out=sys.stdout) -> bool:
    """Exactness check: every protocol must return the plaintext sum."""
    from .protocols import PROTOCOLS
    from .runner import random_inputs, simulate

    ok = True
    for name in PROTOCOLS:
        good = 0
        for trial in range(trials):
            rng = np.random.default_rng([trial, 99])
            inputs = random_inputs(8, 16, rng)
            outcome = simulate(name, inputs, seed=trial, s_len=8)
            good += outcome.result.status == "success" and np.array_equal(outcome.output, outcome.survivor_sum())
        passed = good == trials
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {name}: {good}/{trials} exact", file=out)
    return ok


def main(argv=None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    if args.command == "run":
        return _run(args)
    if args.command == "summarize":
        return _summarize(args)
    if args.command == "latency-matrix":
        return _latency_matrix(args)
    return EXIT_OK if selftest(args.trials) else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
