"""Round-oriented protocol DSL on top of the kernel.

Protocols subclass :class:`AggregationClient` and one of the server classes and
override ``round``. The server opens round r by returning an outbound map
``{client: payload}``; each addressed client answers with ``round(r, payload)``;
once the round has gathered enough answers the server's ``round(r + 1, answers)``
runs. Clients only ever talk to the server; peer-to-peer traffic is encrypted
by the sender and forwarded with :func:`route_messages`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from . import wire
from .errors import DoubleTermination
from .field import GF, PrimeField
from .kernel import SERVER, Agent, Message


def route_messages(messages: Mapping[Any, Mapping[Any, Any]]) -> dict:
    """Transpose ``{src: {dst: payload}}`` into ``{dst: {src: payload}}``."""
    routed: dict = {}
    for src, by_dst in messages.items():
        for dst, payload in by_dst.items():
            routed.setdefault(dst, {})[src] = payload
    return routed


def min_responses(expected: int, delta: float) -> int:
    """Answers needed to advance: everyone except round(delta * expected).

    This equals ceil((1 - delta) * expected) unless delta * expected has a
    fractional part of at least one half, where it tolerates the one extra
    dropout that :class:`DropoutPlan` may inject after rounding.
    """
    return expected - dropout_count(expected, delta)


def dropout_count(n: int, delta: float) -> int:
    """round(delta * n), halves rounded up."""
    return math.floor(round(delta * n, 9) + 0.5)


@dataclass(frozen=True)
class DropoutPlan:
    """Which clients stop responding, and from which round on."""

    delta: float = 0.0
    drop_round: Mapping[int, int] = field(default_factory=dict)
    seed: int | None = None

    @classmethod
    def sample(cls, clients: Sequence[int], delta: float, rounds: int, seed: int) -> "DropoutPlan":
        """Drop exactly round(delta * n) clients, each at a uniform round in [1, rounds]."""
        if not 0 <= delta < 1:
            raise ValueError("delta must be in [0, 1)")
        rng = np.random.default_rng(seed)
        count = dropout_count(len(clients), delta)
        chosen = rng.choice(np.asarray(clients), size=count, replace=False) if count else []
        when = rng.integers(1, rounds + 1, size=count)
        return cls(delta, {int(c): int(r) for c, r in zip(chosen, when)}, seed)

    def drops_at(self, client: int, round_number: int) -> bool:
        r = self.drop_round.get(client)
        return r is not None and round_number >= r

    def survivors(self, clients: Sequence[int], after_round: int) -> list[int]:
        """Clients still responding in round ``after_round``."""
        return [c for c in clients if not self.drops_at(c, after_round)]


class AggregationClient(Agent):
    """Base client: answers the server's round-r message with ``round(r, message)``.

    Returning None sends nothing.
    """

    def __init__(
        self,
        agent_id: int,
        secret_input: np.ndarray,
        n_clients: int,
        field: PrimeField = GF,
        rng: np.random.Generator | None = None,
        params: Any = None,
    ):
        super().__init__(agent_id)
        self.secret_input = secret_input
        self.n_clients = n_clients
        self.GF = field
        self.rng = rng if rng is not None else np.random.default_rng(agent_id)
        self.params = params

    def deliver(self, message: Message):
        reply = self.round(message.round, wire.decode(message.payload))
        if reply is not None:
            self.send(SERVER, message.round, reply)

    def round(self, round_number: int, message: Any) -> Any:
        return None


class AggregationServer(Agent):
    """Base server. Subclasses implement ``round`` and may override ``next_round``.

    With ``wait_for_stragglers`` (the default) a round closes once every
    message in flight has been delivered, which keeps the set of participating
    clients independent of measured compute times. Otherwise it closes as soon
    as ``next_round`` says so and later answers are ignored.
    """

    def __init__(
        self,
        clients: Sequence[int],
        field: PrimeField = GF,
        rng: np.random.Generator | None = None,
        params: Any = None,
        wait_for_stragglers: bool = True,
    ):
        super().__init__(SERVER)
        self.clients = list(clients)
        self.GF = field
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.params = params
        self.wait_for_stragglers = wait_for_stragglers
        self.current_round = 0
        self.expected = 0
        self.received: dict[int, Any] = {}
        self.late_messages = 0
        self.status: str | None = None
        self.reason: str | None = None
        self.result: Any = None

    @property
    def terminated(self) -> bool:
        return self.status is not None

    # -- DSL ---------------------------------------------------------------

    def round(self, round_number: int, messages: dict[int, Any]) -> dict[int, Any] | None:
        raise NotImplementedError

    def next_round(self, round_number: int, messages: Mapping[int, Any]) -> bool:
        return len(messages) > 0 and len(messages) >= self.expected

    def succeed(self, result: Any = None):
        if self.terminated:
            raise DoubleTermination(f"protocol already ended with status {self.status}")
        self.status, self.result = "success", result

    def fail(self, reason: str):
        if self.terminated:
            raise DoubleTermination(f"protocol already ended with status {self.status}")
        self.status, self.reason = "failed", reason

    # -- kernel hooks ------------------------------------------------------

    def start(self):
        self._open_round(1, {})

    def deliver(self, message: Message):
        if self.terminated or message.round != self.current_round:
            self.late_messages += 1
            return
        self.received[message.src] = wire.decode(message.payload)
        if not self.wait_for_stragglers and self.next_round(self.current_round, self.received):
            self._advance()

    def on_idle(self):
        if self.next_round(self.current_round, self.received):
            self._advance()
        else:
            self.fail(f"threshold: round {self.current_round} got {len(self.received)} of {self.expected} answers")

    def _advance(self):
        messages = {src: self.received[src] for src in sorted(self.received)}
        self._open_round(self.current_round + 1, messages)

    def _open_round(self, round_number: int, messages: dict[int, Any]):
        self.current_round = round_number
        self.received = {}
        self.kernel.mark_round(round_number)
        out = self.round(round_number, messages)
        if self.terminated:
            return
        out = out or {}
        self.expected = len(out)
        for client, payload in out.items():
            self.send(client, round_number, payload)


class DropoutAggregationServer(AggregationServer):
    """Server tolerating an expected dropout fraction ``delta`` per round."""

    def __init__(self, clients: Sequence[int], delta: float = 0.0, **kwargs):
        super().__init__(clients, **kwargs)
        self.delta = delta

    def next_round(self, round_number: int, messages: Mapping[int, Any]) -> bool:
        return len(messages) > 0 and len(messages) >= min_responses(self.expected, self.delta)
