"""Double-masking aggregation with dropout recovery, over a complete or sparse graph.

Each client u submits

    y_u = x_u + PRG(b_u) + sum_{v > u} PRG(s_uv) - sum_{v < u} PRG(s_uv)

where b_u is a personal seed and s_uv a seed agreed with neighbor v. Before
submitting, u secret-shares b_u and its private key among its neighbors. The
server then asks survivors for b-shares of other survivors and key shares of
those who dropped after sharing, rebuilds the uncancelled masks and strips them.

With every other client as a neighbor this is the Bonawitz et al. design; on a
Harary graph of degree k (Bell et al.) all per-client work is O(k + l).

Server rounds: 1 graph announcement, 2 key directory, 3 share routing,
4 recovery request, 5 unmasking.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .. import crypto
from ..api import AggregationClient, DropoutAggregationServer
from ..errors import InvalidParams, ThresholdNotMet
from ..shamir import ShareParams, reconstruct_array, share_array
from .common import (
    PeerChannels,
    bytes_to_field,
    field_to_bytes,
    masking_threshold,
    route_among,
)
from .harary import ClientGraph

log = logging.getLogger(__name__)

SEED_BYTES = 32


@dataclass(frozen=True)
class MaskingParams:
    threshold: int | None = None  # None: ceil(2/3 of the neighbors)
    graph_k: int | None = None  # Bell only; None: 2 * ceil(log2 n)
    random_placement: bool = False  # Bell only: shuffle clients around the ring

    def __post_init__(self):
        if self.threshold is not None and self.threshold < 1:
            raise InvalidParams("threshold must be positive")
        if self.graph_k is not None and self.graph_k < 1:
            raise InvalidParams("graph_k must be positive")

    def threshold_for(self, n_neighbors: int) -> int:
        if self.threshold is not None:
            return min(self.threshold, n_neighbors)
        return masking_threshold(n_neighbors)

    def degree_for(self, n: int) -> int:
        k = self.graph_k if self.graph_k is not None else 2 * math.ceil(math.log2(max(n, 2)))
        return max(1, min(k, n - 1))


def mask_sign(u: int, v: int) -> int:
    """Sign with which u applies the pairwise mask shared with v."""
    return 1 if u < v else -1


class MaskingClient(AggregationClient):
    def _neighbors(self, candidates):
        if self.graph is None:
            return sorted(v for v in candidates if v != self.id)
        allowed = set(self.graph.neighbors(self.id))
        return sorted(v for v in candidates if v in allowed)

    def round(self, round_number, message):
        p = self.params or MaskingParams()
        gf = self.GF
        if round_number == 1:  # learn the graph, advertise a public key
            self.graph = None if message is None else ClientGraph(*message)
            self.keypair = crypto.keygen(self.rng)
            self.channels = PeerChannels(self.id, self.keypair)
            return self.keypair.public_key
        if round_number == 2:  # share b_u and sk_u among neighbors
            nb = self._neighbors(message)
            self.channels.agree_with(message, nb)
            self.b_seed = self.rng.bytes(SEED_BYTES)
            params = ShareParams(len(nb), p.threshold_for(len(nb)), q=gf.q)
            b_shares = share_array(bytes_to_field(self.b_seed, gf), params, self.rng, nb)
            sk_shares = share_array(bytes_to_field(self.keypair.private_key, gf), params, self.rng, nb)
            return self.channels.seal(2, {v: (b, s) for v, b, s in zip(nb, b_shares, sk_shares)})
        if round_number == 3:  # submit the double-masked input
            self.held = self.channels.open(2, message)
            length = len(self.secret_input)
            y = gf.vec_add(self.secret_input, crypto.expand_mask(self.b_seed, length, gf))
            plus, minus = [], []
            for v in sorted(self.held):
                mask = crypto.expand_mask(crypto.mask_seed(self.channels.shared[v]), length, gf)
                (plus if mask_sign(self.id, v) > 0 else minus).append(mask)
            y = gf.vec_add(y, gf.vec_sum(plus, length))
            return gf.vec_sub(y, gf.vec_sum(minus, length))
        if round_number == 4:  # reveal what the server may learn, never both for one peer
            alive, dropped = message
            if set(alive) & set(dropped):
                log.warning("client %d: a peer is listed as both alive and dropped", self.id)
                return None
            b = {v: self.held[v][0] for v in alive if v in self.held}
            sk = {v: self.held[v][1] for v in dropped if v in self.held}
            return b, sk


class MaskingServer(DropoutAggregationServer):
    client_rounds = 4
    input_round = 3

    def _graph_spec(self):
        return None

    def _neighbors(self, u: int, among) -> list[int]:
        if self.graph is None:
            return [v for v in among if v != u]
        return [v for v in self.graph.neighbors(u) if v in among]

    def round(self, round_number, messages):
        if round_number == 1:
            spec = self._graph_spec()
            self.graph = None if spec is None else ClientGraph(*spec)
            return {client: spec for client in self.clients}
        if round_number == 2:  # key directory, restricted to neighbors
            self.public_keys = messages
            if self.graph is None:
                return {u: messages for u in messages}
            return {u: {v: messages[v] for v in self._neighbors(u, messages)} for u in messages}
        if round_number == 3:
            self.u2 = sorted(messages)
            return route_among(messages, messages)
        if round_number == 4:  # ask for b-shares of survivors and key shares of the dropped
            self.masked = messages
            u3 = set(messages)
            self.u3 = sorted(u3)
            self.dropped_after_sharing = [v for v in self.u2 if v not in u3]
            if self.graph is None:
                request = (self.u3, self.dropped_after_sharing)
                return {u: request for u in self.u3}
            gone = set(self.dropped_after_sharing)
            return {u: (self._neighbors(u, u3), [v for v in self.graph.neighbors(u) if v in gone]) for u in self.u3}
        if round_number == 5:
            self._unmask(messages)

    def _unmask(self, messages):
        gf = self.GF
        b_shares: dict[int, list] = {}
        sk_shares: dict[int, list] = {}
        for w, (b, sk) in messages.items():
            if set(b) & set(sk):
                self.fail(f"client {w} revealed both shares for {sorted(set(b) & set(sk))}")
                return
            for v, share in b.items():
                b_shares.setdefault(v, []).append(share)
            for v, share in sk.items():
                sk_shares.setdefault(v, []).append(share)
        if set(b_shares) - set(self.u3) or set(sk_shares) - set(self.dropped_after_sharing):
            self.fail("recovery answers do not match the announced survivor sets")
            return

        length = len(next(iter(self.masked.values())))
        total = gf.vec_sum(self.masked.values())
        self.recovered_b: dict[int, bytes] = {}
        self.recovered_sk: dict[int, bytes] = {}
        try:
            for u in self.u3:
                seed = field_to_bytes(reconstruct_array(b_shares.get(u, [])), SEED_BYTES, gf)
                self.recovered_b[u] = seed
                total = gf.vec_sub(total, crypto.expand_mask(seed, length, gf))
            alive = set(self.u3)
            for v in self.dropped_after_sharing:
                affected = self._neighbors(v, alive)
                if not affected:
                    continue
                sk = field_to_bytes(reconstruct_array(sk_shares.get(v, [])), SEED_BYTES, gf)
                if crypto.public_key_of(sk) != self.public_keys[v]:
                    self.fail(f"recovered key of client {v} does not match its public key")
                    return
                self.recovered_sk[v] = sk
                for u in affected:
                    seed = crypto.mask_seed(crypto.agree(sk, self.public_keys[u]))
                    mask = crypto.expand_mask(seed, length, gf)
                    # u added sign(u, v) * mask; take it back out
                    if mask_sign(u, v) > 0:
                        total = gf.vec_sub(total, mask)
                    else:
                        total = gf.vec_add(total, mask)
        except ThresholdNotMet as exc:
            self.fail(f"threshold: {exc}")
            return
        self.succeed(total)


class BonawitzServer(MaskingServer):
    pass


class BellServer(MaskingServer):
    def _graph_spec(self):
        p = self.params or MaskingParams()
        n = len(self.clients)
        seed = int(self.rng.integers(2**63)) if p.random_placement else None
        return (n, p.degree_for(n), seed)


BonawitzClient = MaskingClient
BellClient = MaskingClient
