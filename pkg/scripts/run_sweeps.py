"""Run one or more sweep configs and write a summary next to each results CSV.

    python3 scripts/run_sweeps.py configs/few_clients.yaml configs/large_vectors.yaml
    python3 scripts/run_sweeps.py --runs 1 configs/many_clients.yaml

``--runs`` overrides the per-cell repetition count, handy for a quick look.
"""

import argparse
import dataclasses
import logging
from pathlib import Path

from secagg_sim.experiments import ExperimentConfig, run_experiments, summarize, write_summary


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("configs", nargs="+")
    ap.add_argument("--runs", type=int, help="override runs per cell")
    ap.add_argument("--results", default="results", help="directory for configs without an output path")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    for path in args.configs:
        cfg = ExperimentConfig.load(path)
        if args.runs:
            cfg = dataclasses.replace(cfg, runs=args.runs)
        out = Path(cfg.output or Path(args.results) / (Path(path).stem + ".csv"))
        logging.info("%s -> %s", path, out)
        records = run_experiments(
            cfg,
            out,
            lambda r: logging.info(
                "%s n=%d l=%d run %d %s %.3fs", r.protocol, r.n_clients, r.dimension, r.run_id, r.status, r.total_time_s
            ),
        )
        summary = out.with_name(out.stem + "_summary.csv")
        with open(summary, "w", newline="") as fh:
            write_summary(summarize(records), fh)
        logging.info("summary in %s", summary)


if __name__ == "__main__":
    main()
