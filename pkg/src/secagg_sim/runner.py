"""Wire a protocol, its inputs, a latency model and a dropout plan into one simulation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .api import DropoutPlan
from .field import GF, PrimeField
from .kernel import Kernel, SimulationResult
from .network import LatencyMatrix, zero_matrix
from .protocols import get_protocol


def _seed_int(*parts: int) -> int:
    return int(np.random.SeedSequence([p & 0xFFFFFFFFFFFFFFFF for p in parts]).generate_state(1, np.uint64)[0])


@dataclass
class Outcome:
    result: SimulationResult
    server: Any
    clients: list
    dropout: DropoutPlan
    inputs: np.ndarray
    field: PrimeField

    @property
    def output(self):
        return self.result.output

    def contributors(self) -> list[int]:
        """Clients still responding when inputs are committed."""
        return self.dropout.survivors([c.id for c in self.clients], self.server.input_round)

    def survivor_sum(self) -> np.ndarray:
        """Plaintext oracle: sum of the contributors' inputs."""
        ids = self.contributors()
        return self.field.vec_sum((self.inputs[c - 1] for c in ids), self.inputs.shape[1])


def random_inputs(n: int, length: int, rng: np.random.Generator, field: PrimeField = GF) -> np.ndarray:
    """Uniform integers in [0, 100], one row per client."""
    return field.vector(rng.integers(0, 101, size=(n, length)))


def simulate(
    protocol: str,
    inputs: np.ndarray | Sequence[Sequence[int]],
    *,
    field: PrimeField = GF,
    latency: LatencyMatrix | None = None,
    delta: float = 0.0,
    seed: int = 0,
    dropout: DropoutPlan | None = None,
    calibration_scale: float = 1.0,
    wait_for_stragglers: bool = True,
    keep_log: bool = False,
    **params,
) -> Outcome:
    """Run one aggregation. Client i (1-based) gets ``inputs[i - 1]``.

    Every random choice derives from ``seed``: client i uses stream (seed, 1, i),
    the server (seed, 0), network jitter (seed, 2) and the dropout plan (seed, 3).
    """
    spec = get_protocol(protocol)
    inputs = field.vector(np.asarray(inputs))
    if inputs.ndim != 2:
        raise ValueError("inputs must be a (clients, length) array")
    n = inputs.shape[0]
    ids = list(range(1, n + 1))
    proto_params = spec.make_params(delta=delta, **params)
    server = spec.server(
        ids,
        delta=delta,
        field=field,
        rng=np.random.default_rng([seed, 0]),
        params=proto_params,
        wait_for_stragglers=wait_for_stragglers,
    )
    clients = [spec.client(i, inputs[i - 1], n, field, np.random.default_rng([seed, 1, i]), proto_params) for i in ids]
    if dropout is None:
        dropout = DropoutPlan.sample(ids, delta, server.client_rounds, _seed_int(seed, 3))
    kernel = Kernel(
        [server, *clients],
        latency if latency is not None else zero_matrix(n),
        rng_seed=_seed_int(seed, 2),
        dropout=dropout,
        calibration_scale=calibration_scale,
        keep_log=keep_log,
    )
    return Outcome(kernel.run(), server, clients, dropout, inputs, field)
