"""Latency matrices: zero, constant, dense and geography-based.

Party 0 is the server, parties 1..n are clients. Delays are one-way minimum
delays in integer nanoseconds; per-message jitter comes from a NoiseModel and
is always added on top, so the matrix entry is a floor.

Geography-based matrices are stored factored (position and last-mile latency
per party) instead of as an (n+1)^2 array, which would not fit in memory for
ten thousand clients. ``to_array`` materializes the dense form on demand.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import EmptyDataset

EARTH_RADIUS_M = 6_371_000.0
FIBER_SPEED_M_PER_S = 2.0e8
NS_PER_S = 1_000_000_000
NS_PER_MS = 1_000_000


@dataclass(frozen=True)
class NoiseModel:
    """Additive non-negative per-message jitter.

    A draw is ``(scale_ns + relative * base) * X`` where X is lognormal with
    mean 1 and shape ``sigma`` (or exponential with mean 1).
    """

    kind: str = "none"  # none | lognormal | exponential
    scale_ns: float = 0.0
    relative: float = 0.0
    sigma: float = 0.5

    def __post_init__(self):
        if self.kind not in ("none", "lognormal", "exponential"):
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if self.scale_ns < 0 or self.relative < 0 or self.sigma < 0:
            raise ValueError("noise parameters must be non-negative")

    def sample(self, base_ns: int, rng: np.random.Generator) -> int:
        mean = self.scale_ns + self.relative * base_ns
        if self.kind == "none" or mean == 0:
            return 0
        if self.kind == "exponential":
            x = rng.exponential(1.0)
        else:
            x = rng.lognormal(-0.5 * self.sigma**2, self.sigma)
        return int(mean * x)


NO_NOISE = NoiseModel()
# 99th percentile of the jitter stays under 20% of the base delay:
# 0.07 * exp(-0.125 + 2.326 * 0.5) ~= 0.198
DEFAULT_NOISE = NoiseModel("lognormal", relative=0.07, sigma=0.5)


@dataclass(frozen=True)
class EndpointSample:
    latitude: float
    longitude: float
    last_mile_ns: int

    def __post_init__(self):
        if abs(self.latitude) > 90 or abs(self.longitude) > 180:
            raise ValueError(f"bad coordinates ({self.latitude}, {self.longitude})")
        if self.last_mile_ns < 0:
            raise ValueError("last-mile latency must be non-negative")


# low-latency datacenter profile (northern Virginia)
DEFAULT_SERVER = EndpointSample(39.04, -77.49, 1 * NS_PER_MS)


class LatencyMatrix:
    """Pairwise one-way delays between ``n_parties + 1`` agents."""

    n_parties: int
    noise: NoiseModel

    def delay(self, src: int, dst: int) -> int:
        raise NotImplementedError

    def to_array(self) -> np.ndarray:
        size = self.n_parties + 1
        out = np.empty((size, size), dtype=np.int64)
        for i in range(size):
            out[i] = [self.delay(i, j) for j in range(size)]
        return out

    def _check(self, src: int, dst: int):
        if not (0 <= src <= self.n_parties and 0 <= dst <= self.n_parties):
            raise IndexError(f"party index out of range: {src} -> {dst}")


@dataclass(frozen=True)
class ConstantLatency(LatencyMatrix):
    n_parties: int
    one_way_ns: int
    noise: NoiseModel = NO_NOISE

    def delay(self, src: int, dst: int) -> int:
        self._check(src, dst)
        return 0 if src == dst else self.one_way_ns

    def to_array(self) -> np.ndarray:
        size = self.n_parties + 1
        out = np.full((size, size), self.one_way_ns, dtype=np.int64)
        np.fill_diagonal(out, 0)
        return out


@dataclass(frozen=True, eq=False)
class DenseLatency(LatencyMatrix):
    delays: np.ndarray
    noise: NoiseModel = NO_NOISE

    def __post_init__(self):
        d = np.asarray(self.delays, dtype=np.int64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError("latency matrix must be square")
        if np.any(d < 0) or np.any(np.diag(d) != 0):
            raise ValueError("delays must be non-negative with a zero diagonal")
        object.__setattr__(self, "delays", d)

    @property
    def n_parties(self) -> int:
        return self.delays.shape[0] - 1

    def delay(self, src: int, dst: int) -> int:
        return int(self.delays[src, dst])

    def to_array(self) -> np.ndarray:
        return self.delays.copy()


@dataclass(frozen=True, eq=False)
class GeoLatency(LatencyMatrix):
    """delay(u, v) = last_mile(u) + last_mile(v) + great_circle(u, v) / fiber speed."""

    latitude: np.ndarray
    longitude: np.ndarray
    last_mile_ns: np.ndarray
    noise: NoiseModel = DEFAULT_NOISE

    @property
    def n_parties(self) -> int:
        return len(self.latitude) - 1

    def delay(self, src: int, dst: int) -> int:
        self._check(src, dst)
        if src == dst:
            return 0
        dist = great_circle_m(self.latitude[src], self.longitude[src], self.latitude[dst], self.longitude[dst])
        return int(self.last_mile_ns[src] + self.last_mile_ns[dst] + round(dist / FIBER_SPEED_M_PER_S * NS_PER_S))

    def to_array(self) -> np.ndarray:
        lat = np.radians(self.latitude)
        lon = np.radians(self.longitude)
        dist = _haversine(lat[:, None], lon[:, None], lat[None, :], lon[None, :])
        prop = np.rint(dist / FIBER_SPEED_M_PER_S * NS_PER_S).astype(np.int64)
        out = self.last_mile_ns[:, None] + self.last_mile_ns[None, :] + prop
        np.fill_diagonal(out, 0)
        return out


def _haversine(lat1, lon1, lat2, lon2):
    a = np.sin((lat2 - lat1) / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def great_circle_m(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance in meters on a spherical Earth."""
    return float(_haversine(*np.radians([lat1, lon1, lat2, lon2])))


def zero_matrix(n: int) -> ConstantLatency:
    return ConstantLatency(n, 0)


def constant_matrix(n: int, one_way_ns: int) -> ConstantLatency:
    if one_way_ns < 0:
        raise ValueError("latency must be non-negative")
    return ConstantLatency(n, int(one_way_ns))


def empirical_matrix(
    samples: Sequence[EndpointSample],
    n: int,
    rng: np.random.Generator,
    server_sample: EndpointSample = DEFAULT_SERVER,
    noise: NoiseModel = DEFAULT_NOISE,
) -> GeoLatency:
    """Assign each client a dataset sample (with replacement) and build delays."""
    if not samples:
        raise EmptyDataset("latency dataset has no samples")
    if n < 1:
        raise ValueError("need at least one client")
    picks = rng.integers(0, len(samples), size=n)
    parties = [server_sample] + [samples[i] for i in picks]
    return GeoLatency(
        np.array([p.latitude for p in parties], dtype=np.float64),
        np.array([p.longitude for p in parties], dtype=np.float64),
        np.array([p.last_mile_ns for p in parties], dtype=np.int64),
        noise,
    )


def sample_delay(matrix: LatencyMatrix, src: int, dst: int, rng: np.random.Generator) -> int:
    base = matrix.delay(src, dst)
    return base + matrix.noise.sample(base, rng)


# -- files ---------------------------------------------------------------


def load_endpoints(path: str | Path) -> list[EndpointSample]:
    """Read a ``lat,lon,latency_ms`` CSV of speed-test tile samples."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"lat", "lon", "latency_ms"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        rows = [
            EndpointSample(float(r["lat"]), float(r["lon"]), int(round(float(r["latency_ms"]) * NS_PER_MS)))
            for r in reader
        ]
    if not rows:
        raise EmptyDataset(f"{path}: no samples")
    return rows


def default_dataset_path() -> Path:
    return Path(__file__).parent / "data" / "synthetic_endpoints.csv"


def save_matrix(matrix: LatencyMatrix | np.ndarray, path: str | Path):
    """Write the dense delay matrix as ``.npy`` or, for ``.csv`` paths, CSV."""
    arr = matrix if isinstance(matrix, np.ndarray) else matrix.to_array()
    path = Path(path)
    if path.suffix == ".csv":
        np.savetxt(path, arr, fmt="%d", delimiter=",")
    else:
        with open(path, "wb") as fh:
            np.save(fh, arr)


def load_matrix(path: str | Path, noise: NoiseModel = NO_NOISE) -> DenseLatency:
    path = Path(path)
    if path.suffix == ".csv":
        arr = np.loadtxt(path, dtype=np.int64, delimiter=",", ndmin=2)
    else:
        arr = np.load(path)
    return DenseLatency(arr, noise)
