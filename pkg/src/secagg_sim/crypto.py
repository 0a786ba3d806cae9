"""Key agreement, authenticated encryption and seed-to-mask expansion.

X25519 provides the symmetric ``agree``; ChaCha20-Poly1305 encrypts shares in
transit; raw ChaCha20 keystream expands 32-byte seeds into field vectors.
"""

from __future__ import annotations

import hashlib
from functools import lru_cache
from dataclasses import dataclass

import numpy as np
from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms
from cryptography.hazmat.primitives.ciphers.aead import ChaCha20Poly1305

from .errors import AuthFailure, InvalidPublicKey
from .field import GF, PrimeField

KEY_BYTES = 32
TAG_BYTES = 16


@dataclass(frozen=True)
class KeyPair:
    private_key: bytes
    public_key: bytes

    def __repr__(self):
        return f"KeyPair(public_key={self.public_key.hex()[:16]}...)"


def keygen(rng: np.random.Generator) -> KeyPair:
    sk = X25519PrivateKey.from_private_bytes(rng.bytes(KEY_BYTES))
    return KeyPair(sk.private_bytes_raw(), sk.public_key().public_bytes_raw())


def public_key_of(private_key: bytes) -> bytes:
    return X25519PrivateKey.from_private_bytes(private_key).public_key().public_bytes_raw()


@lru_cache(maxsize=64)
def _private_key(raw: bytes) -> X25519PrivateKey:
    return X25519PrivateKey.from_private_bytes(raw)


def agree(private_key: bytes, public_key: bytes) -> bytes:
    """Shared 32-byte secret; ``agree(a.sk, b.pk) == agree(b.sk, a.pk)``."""
    if not isinstance(public_key, (bytes, bytearray)) or len(public_key) != KEY_BYTES:
        raise InvalidPublicKey("public key must be 32 bytes")
    try:
        raw = _private_key(bytes(private_key)).exchange(X25519PublicKey.from_public_bytes(bytes(public_key)))
    except ValueError as exc:  # low-order point
        raise InvalidPublicKey(str(exc)) from exc
    return hashlib.sha256(b"agree" + raw).digest()


def _derive(secret: bytes, label: bytes) -> bytes:
    return hashlib.blake2b(label, key=secret, digest_size=KEY_BYTES).digest()


def mask_seed(shared: bytes) -> bytes:
    """Pairwise mask seed s_{u,v} from a shared secret (symmetric in u, v)."""
    return _derive(shared, b"pairwise-mask")


def channel_key(shared: bytes, src: int, dst: int) -> bytes:
    """Per-direction encryption key so both directions never share nonces."""
    return _derive(shared, b"channel:%d->%d" % (src, dst))


def nonce_for(round_number: int, index: int) -> int:
    return (round_number << 32) | index


def encrypt(key: bytes, plaintext: bytes, nonce_counter: int) -> bytes:
    return ChaCha20Poly1305(key).encrypt(nonce_counter.to_bytes(12, "big"), plaintext, None)


def decrypt(key: bytes, ciphertext: bytes, nonce_counter: int) -> bytes:
    try:
        return ChaCha20Poly1305(key).decrypt(nonce_counter.to_bytes(12, "big"), ciphertext, None)
    except InvalidTag as exc:
        raise AuthFailure("ciphertext failed authentication") from exc


def expand_mask(seed: bytes, length: int, field: PrimeField = GF) -> np.ndarray:
    """Deterministic uniform field vector from a 32-byte seed.

    Keystream words are truncated to the bit length of q and rejected when
    ``>= q``, so there is no modulo bias.
    """
    if length <= 0:
        return field.zeros(0)
    stream = Cipher(algorithms.ChaCha20(seed, b"\x00" * 16), mode=None).encryptor()
    bits = np.uint32((1 << field.q.bit_length()) - 1)
    q = np.uint32(field.q)
    out = []
    have = 0
    want = length
    while have < length:
        # draw a little extra to make a second pass rare
        n_words = want + (want >> 4) + 8
        words = np.frombuffer(stream.update(b"\x00" * (4 * n_words)), dtype="<u4") & bits
        words = words[words < q]
        out.append(words)
        have += len(words)
        want = length - have
    return np.concatenate(out)[:length].astype(np.uint64)
