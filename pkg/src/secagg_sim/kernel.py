"""Deterministic discrete-event kernel with measured compute time.

Every agent runs on its own simulated timeline. When a message is delivered at
simulated time T, the recipient starts handling it at ``max(T, busy_until)``;
the handler's CPU time d is measured with the thread clock, and anything it
sends arrives at ``start + d + latency``. Running clients one after another
while giving each its own timeline is what makes concurrent client work cost
``max`` rather than ``sum`` of the individual durations.
"""

from __future__ import annotations

import heapq
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from threadpoolctl import threadpool_limits

from . import wire
from .errors import UnknownDestination
from .network import LatencyMatrix, sample_delay

log = logging.getLogger(__name__)

SERVER = 0


@dataclass
class Message:
    src: int
    dst: int
    round: int
    payload: bytes

    @property
    def size_bytes(self) -> int:
        return wire.ENVELOPE_BYTES + len(self.payload)


@dataclass
class SimulationResult:
    status: str  # success | failed | stalled | agent_error
    reason: str | None
    output: Any
    final_time_ns: int
    compute_ns: np.ndarray
    bytes_sent: np.ndarray
    bytes_received: np.ndarray
    bytes_dropped: int
    bytes_undelivered: int
    rounds_completed: int
    dropped_clients: list[int]
    agent_errors: dict[int, str] = field(default_factory=dict)
    # round -> per-agent bytes sent while answering / issuing that round
    round_bytes_sent: dict[int, np.ndarray] = field(default_factory=dict)
    # round -> simulated time at which the server opened it
    round_start_ns: dict[int, int] = field(default_factory=dict)
    # (round, src, dst, size_bytes) in delivery order
    delivery_log: list[tuple[int, int, int, int]] = field(default_factory=list)

    @property
    def n_clients(self) -> int:
        return len(self.compute_ns) - 1


class Agent:
    """Anything the kernel can deliver messages to."""

    def __init__(self, agent_id: int):
        self.id = agent_id
        self.kernel: Kernel | None = None

    def send(self, dst: int, round_number: int, payload: Any):
        self.kernel.send(self, dst, round_number, payload)

    def deliver(self, message: Message):
        raise NotImplementedError


class Kernel:
    def __init__(
        self,
        agents: Sequence[Agent],
        latency: LatencyMatrix,
        rng_seed: int = 0,
        dropout=None,
        calibration_scale: float = 1.0,
        keep_log: bool = True,
    ):
        if not agents or agents[0].id != SERVER:
            raise ValueError("agent 0 must be the server")
        if [a.id for a in agents] != list(range(len(agents))):
            raise ValueError("agent ids must be 0..n in order")
        if latency.n_parties < len(agents) - 1:
            raise ValueError("latency matrix does not cover every agent")
        self.agents = list(agents)
        self.server = agents[0]
        self.latency = latency
        self.rng = np.random.default_rng(rng_seed)
        self.dropout = dropout
        self.scale = calibration_scale
        self.keep_log = keep_log
        for a in self.agents:
            a.kernel = self

        size = len(agents)
        self.compute_ns = np.zeros(size, dtype=np.int64)
        self.bytes_sent = np.zeros(size, dtype=np.int64)
        self.bytes_received = np.zeros(size, dtype=np.int64)
        self.busy_until = np.zeros(size, dtype=np.int64)
        self.bytes_dropped = 0
        self.round_bytes: dict[int, np.ndarray] = {}
        self.round_start_ns: dict[int, int] = {}
        self.dropped: set[int] = set()
        self.errors: dict[int, str] = {}
        self.log: list[tuple[int, int, int, int]] = []
        self.now = 0
        self._queue: list = []
        self._seq = 0
        self._active: Agent | None = None
        self._outbox: list[Message] = []

    # -- called from inside handlers ---------------------------------------

    def send(self, src: Agent, dst: int, round_number: int, payload: Any):
        if src is not self._active:
            raise RuntimeError("send() is only valid inside a handler")
        if not (0 <= dst < len(self.agents)):
            raise UnknownDestination(f"no agent {dst}")
        # encoding happens here so it is charged to the sender's compute time
        self._outbox.append(Message(src.id, dst, round_number, wire.encode(payload)))

    def mark_round(self, round_number: int):
        self.round_start_ns[round_number] = self.now

    # -- loop -------------------------------------------------------------

    def _push(self, at: int, msg: Message):
        heapq.heappush(self._queue, (at, self._seq, msg))
        self._seq += 1

    def _invoke(self, agent: Agent, at: int, fn, *args) -> BaseException | None:
        start = max(at, int(self.busy_until[agent.id]))
        self.now = start
        self._active = agent
        self._outbox = []
        err = None
        t0 = time.thread_time_ns()
        try:
            fn(*args)
        except Exception as exc:  # agents may fail arbitrarily
            err = exc
        elapsed = time.thread_time_ns() - t0
        self._active = None
        d = max(1, int(elapsed * self.scale))
        end = start + d
        self.busy_until[agent.id] = end
        self.compute_ns[agent.id] += d
        self.now = end
        if err is None and not (agent is self.server and self.server.terminated):
            for msg in self._outbox:
                self._account_sent(msg)
                self._push(end + sample_delay(self.latency, agent.id, msg.dst, self.rng), msg)
        self._outbox = []
        return err

    def _account_sent(self, msg: Message):
        size = msg.size_bytes
        self.bytes_sent[msg.src] += size
        per_round = self.round_bytes.get(msg.round)
        if per_round is None:
            per_round = self.round_bytes[msg.round] = np.zeros(len(self.agents), dtype=np.int64)
        per_round[msg.src] += size

    def _drops(self, dst: int, round_number: int) -> bool:
        if dst == SERVER:
            return False
        if dst in self.errors:
            return True
        return self.dropout is not None and self.dropout.drops_at(dst, round_number)

    def run(self) -> SimulationResult:
        server = self.server
        status, reason = None, None
        with threadpool_limits(1):
            err = self._invoke(server, 0, server.start)
            if err is not None:
                status, reason = "agent_error", f"agent {SERVER}: {err!r}"
            while status is None and not server.terminated:
                if not self._queue:
                    before = self._seq
                    err = self._invoke(server, int(self.busy_until[SERVER]), server.on_idle)
                    if err is not None:
                        status, reason = "agent_error", f"agent {SERVER}: {err!r}"
                    elif not server.terminated and self._seq == before:
                        status, reason = "stalled", "event queue drained without a verdict"
                    continue
                at, _, msg = heapq.heappop(self._queue)
                if self._drops(msg.dst, msg.round):
                    self.bytes_dropped += msg.size_bytes
                    self.dropped.add(msg.dst)
                    continue
                self.bytes_received[msg.dst] += msg.size_bytes
                if self.keep_log:
                    self.log.append((msg.round, msg.src, msg.dst, msg.size_bytes))
                agent = self.agents[msg.dst]
                err = self._invoke(agent, at, agent.deliver, msg)
                if err is None:
                    continue
                if agent is server:
                    status, reason = "agent_error", f"agent {SERVER}: {err!r}"
                else:
                    # a crashing client behaves like a dropout
                    log.warning("client %d raised %r; treating it as dropped", msg.dst, err)
                    self.errors[msg.dst] = repr(err)
                    self.dropped.add(msg.dst)
        if status is None:
            status, reason = server.status, server.reason
        undelivered = sum(m.size_bytes for _, _, m in self._queue)
        return SimulationResult(
            status=status,
            reason=reason,
            output=server.result,
            final_time_ns=int(self.now),
            compute_ns=self.compute_ns.copy(),
            bytes_sent=self.bytes_sent.copy(),
            bytes_received=self.bytes_received.copy(),
            bytes_dropped=self.bytes_dropped,
            bytes_undelivered=undelivered,
            rounds_completed=server.current_round,
            dropped_clients=sorted(self.dropped),
            agent_errors=dict(self.errors),
            round_bytes_sent=self.round_bytes,
            round_start_ns=dict(self.round_start_ns),
            delivery_log=self.log,
        )


def run_simulation(
    agents: Sequence[Agent],
    latency: LatencyMatrix,
    rng_seed: int = 0,
    dropout=None,
    calibration_scale: float = 1.0,
) -> SimulationResult:
    return Kernel(agents, latency, rng_seed, dropout, calibration_scale).run()
