"""Config-driven experiment sweeps with CSV output."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import logging
import math
import resource
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np
import yaml

from .errors import ConfigError
from .field import DEFAULT_Q, PrimeField, is_prime
from .network import (
    DEFAULT_NOISE,
    NO_NOISE,
    NS_PER_MS,
    LatencyMatrix,
    NoiseModel,
    constant_matrix,
    default_dataset_path,
    empirical_matrix,
    load_endpoints,
    load_matrix,
    zero_matrix,
)
from .protocols import get_protocol, known_param_names
from .runner import random_inputs, simulate

log = logging.getLogger(__name__)

MIN_Q = 1 << 16


@dataclass(frozen=True)
class LatencySpec:
    kind: str = "zero"  # zero | constant | empirical | matrix
    one_way_ms: float = 0.0  # constant
    dataset: str | None = None  # empirical; None uses the bundled synthetic dataset
    path: str | None = None  # matrix (.npy or .csv)
    noise: str = "default"  # default | none

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "empirical", "matrix"):
            raise ValueError(f"unknown latency kind {self.kind!r}")
        if self.noise not in ("default", "none"):
            raise ValueError(f"unknown noise setting {self.noise!r}")
        if self.one_way_ms < 0:
            raise ValueError("one_way_ms must be non-negative")
        if self.kind == "matrix" and not self.path:
            raise ValueError("matrix latency needs a path")

    @property
    def noise_model(self) -> NoiseModel:
        return DEFAULT_NOISE if self.noise == "default" else NO_NOISE

    def build(self, n: int, rng: np.random.Generator) -> LatencyMatrix:
        if self.kind == "zero":
            return zero_matrix(n)
        if self.kind == "constant":
            return constant_matrix(n, int(round(self.one_way_ms * NS_PER_MS)))
        if self.kind == "matrix":
            return load_matrix(self.path, self.noise_model)
        samples = _endpoints(self.dataset or str(default_dataset_path()))
        return empirical_matrix(samples, n, rng, noise=self.noise_model)


_ENDPOINT_CACHE: dict[str, list] = {}


def _endpoints(path: str):
    if path not in _ENDPOINT_CACHE:
        _ENDPOINT_CACHE[path] = load_endpoints(path)
    return _ENDPOINT_CACHE[path]


@dataclass(frozen=True)
class ExperimentConfig:
    protocols: tuple[str, ...]
    clients: tuple[int, ...]
    dimensions: tuple[int, ...]
    runs: int = 5
    q: int = DEFAULT_Q
    delta: float = 0.0
    latency: LatencySpec = field(default_factory=LatencySpec)
    params: dict = field(default_factory=dict)
    seed: int = 0
    output: str | None = None
    calibration_scale: float = 1.0
    wait_for_stragglers: bool = True

    def __post_init__(self):
        if not self.protocols or not self.clients or not self.dimensions:
            raise ValueError("protocols, clients and dimensions must be non-empty")
        for name in self.protocols:
            get_protocol(name)
        if any(n < 1 for n in self.clients) or any(length < 0 for length in self.dimensions):
            raise ValueError("client counts must be >= 1 and dimensions >= 0")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if not 0 <= self.delta < 1:
            raise ValueError("delta must be in [0, 1)")
        if self.q < MIN_Q or not is_prime(self.q) or self.q >= 1 << 32:
            raise ValueError(f"q must be a prime in [2^16, 2^32), got {self.q}")
        unknown = set(self.params) - known_param_names()
        if unknown:
            raise ValueError(f"unknown entries in params: {sorted(unknown)}")
        if self.calibration_scale <= 0:
            raise ValueError("calibration_scale must be positive")

    @classmethod
    def from_yaml(cls, text: str, source: str = "<config>") -> "ExperimentConfig":
        """Parse a YAML document; every error names the offending line."""
        try:
            root = yaml.compose(text)
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            mark = getattr(exc, "problem_mark", None)
            line = mark.line + 1 if mark is not None else 1
            raise ConfigError(f"{source}:{line}: {getattr(exc, 'problem', None) or exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{source}:1: expected a mapping of settings")
        lines = {}
        if isinstance(root, yaml.MappingNode):
            lines = {k.value: k.start_mark.line + 1 for k, _ in root.value}

        def err(key, message):
            return ConfigError(f"{source}:{lines.get(key, 1)}: {key}: {message}")

        allowed = {f.name for f in dataclasses.fields(cls)} | {"protocol"}
        for key in data:
            if key not in allowed:
                raise err(key, "unknown setting")
        kwargs: dict[str, Any] = {}
        proto = data.get("protocols", data.get("protocol"))
        if proto is None:
            raise ConfigError(f"{source}:1: protocols: missing")
        kwargs["protocols"] = tuple(proto if isinstance(proto, list) else [proto])
        for key in ("clients", "dimensions"):
            value = data.get(key)
            if value is None:
                raise ConfigError(f"{source}:1: {key}: missing")
            kwargs[key] = tuple(value if isinstance(value, list) else [value])
        for key in ("runs", "q", "delta", "seed", "output", "calibration_scale", "wait_for_stragglers", "params"):
            if key in data:
                kwargs[key] = data[key]
        if "latency" in data:
            try:
                lat = data["latency"]
                kwargs["latency"] = LatencySpec(**({"kind": lat} if isinstance(lat, str) else lat))
            except (TypeError, ValueError) as exc:
                raise err("latency", exc) from None
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            key = next((k for k in lines if k in str(exc)), "protocols")
            raise err(key, exc) from None

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        path = Path(path)
        return cls.from_yaml(path.read_text(), str(path))

    def cells(self) -> Iterable[tuple[str, int, int, int]]:
        for protocol in self.protocols:
            for n in self.clients:
                for length in self.dimensions:
                    for run_id in range(self.runs):
                        yield protocol, n, length, run_id


@dataclass
class ExperimentRecord:
    protocol: str
    n_clients: int
    dimension: int
    run_id: int
    status: str
    total_time_s: float
    avg_client_compute_s: float
    server_compute_s: float
    avg_client_bytes_sent: float
    avg_client_bytes_received: float
    server_bytes_sent: int
    server_bytes_received: int
    rounds_completed: int
    dropped_clients: int
    output_digest: str = ""
    peak_rss_mb: float = 0.0


COLUMNS = [f.name for f in dataclasses.fields(ExperimentRecord)]
TIMING_COLUMNS = ("total_time_s", "avg_client_compute_s", "server_compute_s", "peak_rss_mb")
METRIC_COLUMNS = [
    c for c in COLUMNS if c not in ("protocol", "n_clients", "dimension", "run_id", "status", "output_digest")
]


def cell_seed(master: int, protocol: str, n: int, length: int, run_id: int) -> int:
    digest = hashlib.sha256(f"{master}|{protocol}|{n}|{length}|{run_id}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def peak_rss_mb() -> float:
    kb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    return kb / (1 << 20) if sys.platform == "darwin" else kb / 1024


def output_digest(output) -> str:
    if output is None:
        return ""
    return hashlib.sha256(np.asarray(output, dtype="<u4").tobytes()).hexdigest()[:16]


def run_cell(config: ExperimentConfig, protocol: str, n: int, length: int, run_id: int) -> ExperimentRecord:
    seed = cell_seed(config.seed, protocol, n, length, run_id)
    gf = PrimeField(config.q)
    rng = np.random.default_rng([seed, 10])
    inputs = random_inputs(n, length, rng, gf)
    latency = config.latency.build(n, np.random.default_rng([seed, 11]))
    out = simulate(
        protocol,
        inputs,
        field=gf,
        latency=latency,
        delta=config.delta,
        seed=seed,
        calibration_scale=config.calibration_scale,
        wait_for_stragglers=config.wait_for_stragglers,
        **config.params,
    )
    r = out.result
    status = r.status if r.status in ("success", "failed", "stalled") else "failed"
    if status != "success":
        log.info("%s n=%d l=%d run %d: %s (%s)", protocol, n, length, run_id, r.status, r.reason)
    return ExperimentRecord(
        protocol=protocol,
        n_clients=n,
        dimension=length,
        run_id=run_id,
        status=status,
        total_time_s=r.final_time_ns / 1e9,
        avg_client_compute_s=float(r.compute_ns[1:].mean()) / 1e9,
        server_compute_s=float(r.compute_ns[0]) / 1e9,
        avg_client_bytes_sent=float(r.bytes_sent[1:].mean()),
        avg_client_bytes_received=float(r.bytes_received[1:].mean()),
        server_bytes_sent=int(r.bytes_sent[0]),
        server_bytes_received=int(r.bytes_received[0]),
        rounds_completed=r.rounds_completed,
        dropped_clients=len(r.dropped_clients),
        output_digest=output_digest(r.output) if status == "success" else "",
        peak_rss_mb=round(peak_rss_mb(), 1),
    )


def run_experiments(
    config: ExperimentConfig,
    out_path: str | Path | None = None,
    progress: Callable[[ExperimentRecord], None] | None = None,
) -> list[ExperimentRecord]:
    """Run the full sweep. Rows are flushed to ``out_path`` as they finish."""
    out_path = out_path or config.output
    records = []
    fh = None
    if out_path:
        Path(out_path).parent.mkdir(parents=True, exist_ok=True)
        fh = open(out_path, "w", newline="", encoding="utf-8")
        writer = csv.DictWriter(fh, fieldnames=COLUMNS)
        writer.writeheader()
        fh.flush()
    try:
        for protocol, n, length, run_id in config.cells():
            try:
                rec = run_cell(config, protocol, n, length, run_id)
            except Exception:  # one broken cell must not end the sweep
                log.exception("cell %s n=%d l=%d run %d crashed", protocol, n, length, run_id)
                rec = ExperimentRecord(protocol, n, length, run_id, "failed", 0.0, 0.0, 0.0, 0.0, 0.0, 0, 0, 0, 0)
            records.append(rec)
            if fh is not None:
                writer.writerow(dataclasses.asdict(rec))
                fh.flush()
            if progress is not None:
                progress(rec)
    finally:
        if fh is not None:
            fh.close()
    return records


# -- CSV and summaries -----------------------------------------------------

_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentRecord)}


def _parse(name: str, value: str):
    kind = _TYPES[name]
    if kind in ("int", int):
        return int(value)
    if kind in ("float", float):
        return float(value)
    return value


def write_records(records: Sequence[ExperimentRecord], path: str | Path):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=COLUMNS)
        writer.writeheader()
        for rec in records:
            writer.writerow(dataclasses.asdict(rec))


def read_records(path: str | Path) -> list[ExperimentRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(COLUMNS) - set(reader.fieldnames or ())
        # the two trailing columns are optional for files written by other tools
        if missing - {"output_digest", "peak_rss_mb"}:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        return [ExperimentRecord(**{k: _parse(k, v) for k, v in row.items() if k in _TYPES}) for row in reader]


def summarize(records: Iterable[ExperimentRecord]) -> list[dict]:
    """Mean and standard error per (protocol, n, l); failed runs only count toward failure_rate."""
    cells: dict[tuple, list[ExperimentRecord]] = {}
    for rec in records:
        cells.setdefault((rec.protocol, rec.n_clients, rec.dimension), []).append(rec)
    rows = []
    for (protocol, n, length), recs in cells.items():
        ok = [r for r in recs if r.status == "success"]
        row: dict[str, Any] = {
            "protocol": protocol,
            "n_clients": n,
            "dimension": length,
            "runs": len(recs),
            "failure_rate": 1 - len(ok) / len(recs),
        }
        for col in METRIC_COLUMNS:
            values = np.array([getattr(r, col) for r in ok], dtype=np.float64)
            if len(values) == 0:
                row[f"{col}_mean"] = row[f"{col}_stderr"] = None
                continue
            row[f"{col}_mean"] = float(values.mean())
            row[f"{col}_stderr"] = float(values.std(ddof=1) / math.sqrt(len(values))) if len(values) > 1 else 0.0
        rows.append(row)
    return rows


def summary_columns() -> list[str]:
    cols = ["protocol", "n_clients", "dimension", "runs", "failure_rate"]
    for col in METRIC_COLUMNS:
        cols += [f"{col}_mean", f"{col}_stderr"]
    return cols


def write_summary(rows: Sequence[dict], out=None):
    out = out or sys.stdout
    writer = csv.DictWriter(out, fieldnames=summary_columns())
    writer.writeheader()
    for row in rows:
        writer.writerow({k: ("" if v is None else v) for k, v in row.items()})
