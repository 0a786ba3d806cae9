"""Pieces shared by the share-exchanging protocols."""

from __future__ import annotations

import math
from typing import Any, Iterable, Mapping

import numpy as np

from .. import crypto, wire
from ..api import route_messages
from ..field import PrimeField


def default_threshold(n_holders: int) -> int:
    """Reconstruction threshold used when none is configured: half the holders."""
    return max(1, n_holders // 2)


def masking_threshold(n_neighbors: int) -> int:
    """Default threshold for key and seed shares in the masking protocols."""
    return max(1, math.ceil(2 * n_neighbors / 3))


def chunk_bytes(field: PrimeField) -> int:
    """Bytes per field element when packing byte strings, so every chunk is < q."""
    return max(1, (field.q.bit_length() - 1) // 8)


def bytes_to_field(data: bytes, field: PrimeField) -> np.ndarray:
    size = chunk_bytes(field)
    padded = data + b"\x00" * (-len(data) % size)
    return np.array(
        [int.from_bytes(padded[i : i + size], "little") for i in range(0, len(padded), size)],
        dtype=np.uint64,
    )


def field_to_bytes(values: np.ndarray, n_bytes: int, field: PrimeField) -> bytes:
    size = chunk_bytes(field)
    raw = b"".join(int(v).to_bytes(size, "little") for v in values)
    return raw[:n_bytes]


class PeerChannels:
    """Pairwise shared secrets of one client and the encryption built on them."""

    def __init__(self, me: int, keypair: crypto.KeyPair):
        self.me = me
        self.keypair = keypair
        self.shared: dict[int, bytes] = {}

    def agree_with(self, public_keys: Mapping[int, bytes], peers: Iterable[int]):
        for v in peers:
            if v != self.me and v not in self.shared:
                self.shared[v] = crypto.agree(self.keypair.private_key, public_keys[v])

    def seal(self, round_number: int, payloads: Mapping[int, Any]) -> dict[int, bytes]:
        nonce = crypto.nonce_for(round_number, 0)
        return {
            v: crypto.encrypt(crypto.channel_key(self.shared[v], self.me, v), wire.encode(obj), nonce)
            for v, obj in payloads.items()
        }

    def open(self, round_number: int, bundle: Mapping[int, bytes]) -> dict[int, Any]:
        """Decrypt a routed bundle that peers sealed in ``round_number``."""
        nonce = crypto.nonce_for(round_number, 0)
        return {
            v: wire.decode(crypto.decrypt(crypto.channel_key(self.shared[v], v, self.me), ct, nonce))
            for v, ct in bundle.items()
        }


def route_among(messages: Mapping[int, Mapping[int, Any]], alive: Iterable[int]) -> dict[int, dict]:
    """Transpose sender bundles, keeping only recipients in ``alive``.

    Every alive recipient gets an entry, possibly empty.
    """
    routed = route_messages(messages)
    return {u: routed.get(u, {}) for u in sorted(alive)}
