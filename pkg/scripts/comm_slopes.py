"""Fit log-log slopes of per-client bytes against n or l from a results CSV.

    python3 scripts/comm_slopes.py results/large_vectors.csv --x dimension
    python3 scripts/comm_slopes.py results/few_clients.csv --x n_clients --column server_compute_s

Only successful runs are used; each (protocol, x) point is the mean over runs.
"""

import argparse

import numpy as np

from secagg_sim.experiments import read_records


def slopes(records, x_col: str, y_col: str) -> dict[str, tuple[float, list]]:
    points: dict[str, dict[int, list[float]]] = {}
    for r in records:
        if r.status == "success":
            points.setdefault(r.protocol, {}).setdefault(getattr(r, x_col), []).append(getattr(r, y_col))
    fits = {}
    for protocol, by_x in points.items():
        xs = sorted(x for x in by_x if x > 0)
        ys = [float(np.mean(by_x[x])) for x in xs]
        if len(xs) >= 2 and min(ys) > 0:
            fits[protocol] = (float(np.polyfit(np.log(xs), np.log(ys), 1)[0]), list(zip(xs, ys)))
    return fits


def main():
    ap = argparse.ArgumentParser(description="log-log slope per protocol")
    ap.add_argument("csv")
    ap.add_argument("--x", default="n_clients", choices=["n_clients", "dimension"])
    ap.add_argument("--column", default="avg_client_bytes_sent")
    args = ap.parse_args()
    for protocol, (slope, pts) in sorted(slopes(read_records(args.csv), args.x, args.column).items()):
        print(f"{protocol:>16}  slope {slope:6.3f}  " + "  ".join(f"{x}:{y:.4g}" for x, y in pts))


if __name__ == "__main__":
    main()
