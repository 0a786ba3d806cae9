"""Plain secret-sharing aggregation.

Clients exchange public keys, Shamir-share their whole input vector to every
other client (encrypted, routed by the server), add up the shares they hold and
return the sum; the server interpolates the sum of inputs from those summed
shares. Each client uploads n shares of length l, hence O(n l) traffic.
"""

from __future__ import annotations

from dataclasses import dataclass

from .. import crypto
from ..api import AggregationClient, DropoutAggregationServer
from ..errors import ThresholdNotMet
from ..shamir import ShareParams, reconstruct_array, share_array, sum_share_array
from .common import PeerChannels, default_threshold, route_among


@dataclass(frozen=True)
class SecretSharingParams:
    threshold: int | None = None  # None: half of the key holders

    def threshold_for(self, n_holders: int) -> int:
        return self.threshold if self.threshold is not None else default_threshold(n_holders)


class SecretSharingClient(AggregationClient):
    def round(self, round_number, message):
        if round_number == 1:  # advertise a public key
            self.keypair = crypto.keygen(self.rng)
            self.channels = PeerChannels(self.id, self.keypair)
            return self.keypair.public_key
        if round_number == 2:  # share the input with everyone who advertised
            holders = sorted(message)
            t = (self.params or SecretSharingParams()).threshold_for(len(holders))
            params = ShareParams(len(holders), t, q=self.GF.q)
            shares = share_array(self.secret_input, params, self.rng, points=holders)
            self.channels.agree_with(message, holders)
            self.own_share = shares[holders.index(self.id)]
            return self.channels.seal(2, {s.owner_point: s for s in shares if s.owner_point != self.id})
        if round_number == 3:  # add up the shares received
            received = self.channels.open(2, message)
            return sum_share_array([self.own_share, *received.values()])


class SecretSharingServer(DropoutAggregationServer):
    client_rounds = 3
    input_round = 2

    def round(self, round_number, messages):
        if round_number == 1:
            return {client: None for client in self.clients}
        if round_number == 2:  # broadcast the key directory
            self.public_keys = messages
            return {u: messages for u in messages}
        if round_number == 3:  # forward encrypted shares
            self.contributors = sorted(messages)
            return route_among(messages, messages)
        if round_number == 4:  # interpolate the sum
            try:
                self.succeed(reconstruct_array(list(messages.values())))
            except ThresholdNotMet as exc:
                self.fail(f"threshold: {exc}")
