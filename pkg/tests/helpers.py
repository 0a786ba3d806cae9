"""Stub agents for kernel-level tests."""

import time

from secagg_sim.api import AggregationClient, AggregationServer
from secagg_sim.field import GF


def spin(ms: float):
    """Burn CPU on this thread for ``ms`` milliseconds of thread time."""
    end = time.thread_time_ns() + int(ms * 1e6)
    while time.thread_time_ns() < end:
        pass


class EchoClient(AggregationClient):
    """Answers every round with an empty acknowledgement, optionally after spinning."""

    def __init__(self, agent_id, n_clients, busy_ms=None):
        super().__init__(agent_id, GF.zeros(0), n_clients)
        self.busy_ms = busy_ms or {}

    def round(self, round_number, message):
        if round_number in self.busy_ms:
            spin(self.busy_ms[round_number])
        return b""


class RoundsServer(AggregationServer):
    """Broadcasts to every client for ``rounds`` rounds, then succeeds."""

    def __init__(self, clients, rounds=4, **kw):
        super().__init__(clients, **kw)
        self.rounds = rounds

    def round(self, round_number, messages):
        if round_number > self.rounds:
            self.succeed(GF.zeros(0))
            return None
        return {c: None for c in self.clients}


def stub_agents(n, rounds=4, busy_ms=None):
    busy_ms = busy_ms or {}
    server = RoundsServer(list(range(1, n + 1)), rounds=rounds)
    return [server] + [EchoClient(i, n, busy_ms.get(i)) for i in range(1, n + 1)]
