"""Generate the bundled synthetic endpoint dataset (lat, lon, last-mile latency).

Stands in for per-tile speed-test measurements: points cluster around large
metro areas and the last-mile latency is lognormal with a ~20 ms median.

    python3 scripts/make_synthetic_dataset.py [--rows 1000] [--seed 7] [--out PATH]
"""

import argparse
import csv
from pathlib import Path

import numpy as np

# (lat, lon, relative weight)
METROS = [
    (40.71, -74.01, 8),
    (34.05, -118.24, 6),
    (41.88, -87.63, 4),
    (29.76, -95.37, 3),
    (47.61, -122.33, 2),
    (25.76, -80.19, 2),
    (43.65, -79.38, 2),
    (19.43, -99.13, 4),
    (-23.55, -46.63, 5),
    (-34.60, -58.38, 3),
    (4.71, -74.07, 2),
    (51.51, -0.13, 5),
    (48.86, 2.35, 4),
    (52.52, 13.40, 3),
    (40.42, -3.70, 2),
    (41.90, 12.50, 2),
    (55.76, 37.62, 3),
    (30.04, 31.24, 3),
    (6.52, 3.38, 3),
    (-1.29, 36.82, 2),
    (-26.20, 28.05, 2),
    (28.61, 77.21, 6),
    (19.08, 72.88, 5),
    (12.97, 77.59, 3),
    (35.68, 139.69, 6),
    (37.57, 126.98, 4),
    (31.23, 121.47, 6),
    (39.90, 116.41, 5),
    (22.32, 114.17, 3),
    (1.35, 103.82, 2),
    (-6.21, 106.85, 4),
    (14.60, 120.98, 3),
    (-33.87, 151.21, 2),
    (-37.81, 144.96, 2),
    (24.71, 46.68, 2),
    (41.01, 28.98, 3),
]


def synthesize(rows: int, rng: np.random.Generator) -> np.ndarray:
    centers = np.array([(lat, lon) for lat, lon, _ in METROS])
    weights = np.array([w for *_, w in METROS], dtype=float)
    pick = rng.choice(len(METROS), size=rows, p=weights / weights.sum())
    lat = np.clip(centers[pick, 0] + rng.normal(0, 1.5, rows), -89.9, 89.9)
    lon = (centers[pick, 1] + rng.normal(0, 1.5, rows) + 180) % 360 - 180
    latency_ms = np.clip(rng.lognormal(np.log(20), 0.6, rows), 2, 400)
    return np.column_stack([lat, lon, latency_ms])


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--rows", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument(
        "--out",
        default=str(Path(__file__).resolve().parents[1] / "src/secagg_sim/data/synthetic_endpoints.csv"),
    )
    args = parser.parse_args()
    data = synthesize(args.rows, np.random.default_rng(args.seed))
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lat", "lon", "latency_ms"])
        for lat, lon, ms in data:
            writer.writerow([f"{lat:.4f}", f"{lon:.4f}", f"{ms:.2f}"])
    print(f"wrote {args.rows} rows to {args.out}")


if __name__ == "__main__":
    main()
