"""LWE-masked aggregation with (packed) secret sharing of the short keys.

Each client uploads ``x_i + A S_i + E_i`` where A is an l-by-s_len public
matrix and S_i a fresh length-s_len secret. Only S_i goes through secret
sharing, so the O(n) share traffic is independent of l. The server learns
``sum S_i`` from the summed shares and strips ``A sum S_i`` off the sum of the
masked vectors, leaving ``sum x_i + sum E_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import crypto
from ..api import AggregationClient, DropoutAggregationServer
from ..errors import InvalidParams, ThresholdNotMet
from ..field import PrimeField
from ..shamir import ShareParams, reconstruct_array, share_array, sum_share_array
from .common import PeerChannels, default_threshold, route_among

# rows of A generated per block; fixed so every party rebuilds the same A
A_BLOCK_ROWS = 1024


@dataclass(frozen=True)
class StevensParams:
    s_len: int = 710
    a_seed: int = 0
    error_dist: str = "none"  # none | centered-binomial
    eta: int = 1
    pack_k: int = 16
    threshold: int | None = None  # None: half of the key holders
    delta: float = 0.0  # dropout fraction the packing must leave room for

    def __post_init__(self):
        if self.s_len < 1:
            raise InvalidParams("s_len must be at least 1")
        if self.error_dist not in ("none", "centered-binomial"):
            raise InvalidParams(f"unknown error distribution {self.error_dist!r}")
        if self.eta < 0 or self.pack_k < 1:
            raise InvalidParams("eta must be >= 0 and pack_k >= 1")

    def threshold_for(self, n_holders: int) -> int:
        return self.threshold if self.threshold is not None else default_threshold(n_holders)

    def share_params(self, n_holders: int, q: int) -> ShareParams:
        """Sharing parameters for S, with the packing factor reduced if needed.

        The packing factor is clamped so that the shares expected to survive
        (a (1 - delta) fraction) still reach ``t + pack_k - 1``.
        """
        t = self.threshold_for(n_holders)
        room = math.floor(round((1 - self.delta) * n_holders, 9)) - t + 1
        k = max(1, min(self.pack_k, room))
        return ShareParams(n_holders, t, k, q)


def lwe_mask(field: PrimeField, a_seed: int, length: int, s: np.ndarray) -> np.ndarray:
    """``A s`` for the public matrix A of shape (length, len(s)), built block by block."""
    out = np.empty(length, dtype=np.uint64)
    for b, start in enumerate(range(0, length, A_BLOCK_ROWS)):
        rows = min(A_BLOCK_ROWS, length - start)
        block = field.random_matrix((rows, len(s)), np.random.default_rng([a_seed, b]))
        out[start : start + rows] = field.matvec(block, s)
    return out


def centered_binomial(field: PrimeField, eta: int, length: int, rng: np.random.Generator) -> np.ndarray:
    """Errors in [-eta, eta]: sum of eta fair coin differences."""
    e = rng.binomial(eta, 0.5, size=length) - rng.binomial(eta, 0.5, size=length)
    return field.vector(e)


class StevensClient(AggregationClient):
    def round(self, round_number, message):
        p = self.params or StevensParams()
        if round_number == 1:
            self.keypair = crypto.keygen(self.rng)
            self.channels = PeerChannels(self.id, self.keypair)
            return self.keypair.public_key
        if round_number == 2:  # mask the input, share the LWE secret
            gf = self.GF
            holders = sorted(message)
            s = gf.random_vector(p.s_len, self.rng)
            masked = gf.vec_add(self.secret_input, lwe_mask(gf, p.a_seed, len(self.secret_input), s))
            if p.error_dist == "centered-binomial" and p.eta:
                masked = gf.vec_add(masked, centered_binomial(gf, p.eta, len(masked), self.rng))
            shares = share_array(s, p.share_params(len(holders), gf.q), self.rng, holders)
            self.channels.agree_with(message, holders)
            self.own_share = shares[holders.index(self.id)]
            sealed = self.channels.seal(2, {sh.owner_point: sh for sh in shares if sh.owner_point != self.id})
            return masked, sealed
        if round_number == 3:
            received = self.channels.open(2, message)
            return sum_share_array([self.own_share, *received.values()])


class StevensServer(DropoutAggregationServer):
    client_rounds = 3
    input_round = 2

    def round(self, round_number, messages):
        p = self.params or StevensParams()
        if round_number == 1:
            return {client: None for client in self.clients}
        if round_number == 2:
            self.public_keys = messages
            return {u: messages for u in messages}
        if round_number == 3:  # keep the masked vectors, forward the shares
            self.contributors = sorted(messages)
            self.masked_sum = self.GF.vec_sum(m[0] for m in messages.values())
            return route_among({u: m[1] for u, m in messages.items()}, messages)
        if round_number == 4:  # unmask with the reconstructed secret sum
            try:
                s_sum = reconstruct_array(list(messages.values()))
            except ThresholdNotMet as exc:
                self.fail(f"threshold: {exc}")
                return
            mask = lwe_mask(self.GF, p.a_seed, len(self.masked_sum), s_sum)
            self.succeed(self.GF.vec_sub(self.masked_sum, mask))
