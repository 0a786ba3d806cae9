"""Vectorized (packed) Shamir secret sharing over F_q.

A secret vector is cut into blocks of ``pack_k`` elements. Each block gets its
own random polynomial f of degree ``t + pack_k - 2`` with ``f(e_j)`` equal to
the j-th secret of the block, where ``e_j`` are fixed embedding points. Party
``i`` holds ``f(x_i)``. Any ``t + pack_k - 1`` shares determine the block and
any ``t - 1`` shares are jointly uniform. With ``pack_k == 1`` this is plain
(t, n) Shamir with the secret at x = 0.

Embedding points: 0 for standard sharing, ``q-1, q-2, ..., q-pack_k`` for
packed sharing. Party points default to ``1..n``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import (
    DuplicatePoints,
    EmptySecret,
    InconsistentParams,
    InvalidParams,
    MixedOwnerPoints,
    ThresholdNotMet,
)
from .field import DEFAULT_Q, PrimeField

_U64 = np.uint64


@dataclass(frozen=True)
class ShareParams:
    n: int
    t: int
    pack_k: int = 1
    q: int = DEFAULT_Q
    packed: bool | None = None
    # length of the original secret, filled in by share_array
    secret_len: int | None = None

    def __post_init__(self):
        if self.packed is None:
            object.__setattr__(self, "packed", self.pack_k > 1)
        if self.t < 1 or self.pack_k < 1:
            raise InvalidParams(f"need t >= 1 and pack_k >= 1 (t={self.t}, pack_k={self.pack_k})")
        if self.pack_k > 1 and not self.packed:
            raise InvalidParams("pack_k > 1 requires packed sharing")
        if self.required > self.n:
            raise InvalidParams(f"t + pack_k - 1 = {self.required} shares needed but only n = {self.n} issued")
        if self.n + self.pack_k >= self.q:
            raise InvalidParams("field too small for the requested points")

    @property
    def required(self) -> int:
        """Number of shares needed to reconstruct."""
        return self.t + self.pack_k - 1

    @property
    def degree(self) -> int:
        return self.required - 1

    @property
    def embedding_points(self) -> tuple[int, ...]:
        if not self.packed:
            return (0,)
        return tuple(self.q - 1 - j for j in range(self.pack_k))

    @property
    def field(self) -> PrimeField:
        return PrimeField(self.q)


@dataclass(frozen=True, eq=False)
class ShareArray:
    """One party's shares of every block of a secret vector."""

    owner_point: int
    values: np.ndarray
    params: ShareParams

    def __eq__(self, other):
        return (
            isinstance(other, ShareArray)
            and self.owner_point == other.owner_point
            and self.params == other.params
            and np.array_equal(self.values, other.values)
        )

    __hash__ = None


def lagrange_weights(gf: PrimeField, xs: Sequence[int], targets: Sequence[int]) -> np.ndarray:
    """Matrix W with ``W[j, i] = L_i(targets[j])`` for the basis through ``xs``.

    Targets must not coincide with any x.
    """
    x = np.asarray(xs, dtype=_U64)
    e = np.asarray(targets, dtype=_U64)
    q = _U64(gf.q)
    # D_i = prod_{l != i} (x_i - x_l)
    diff = (x[:, None] + (q - x[None, :])) % q
    np.fill_diagonal(diff, 1)
    denom = _row_products(gf, diff)
    # (e_j - x_i) for every target/point pair
    ex = (e[:, None] + (q - x[None, :])) % q
    full = _row_products(gf, ex)
    inv = gf.vec_inv(gf.reduce(ex * denom[None, :]))
    return gf.reduce(inv * full[:, None])


def _row_products(gf: PrimeField, mat: np.ndarray) -> np.ndarray:
    """Product mod q along each row, by pairwise halving."""
    while mat.shape[1] > 1:
        if mat.shape[1] % 2:
            mat = np.concatenate([mat, np.ones((mat.shape[0], 1), dtype=_U64)], axis=1)
        mat = gf.reduce(mat[:, ::2] * mat[:, 1::2])
    return mat[:, 0] if mat.shape[1] else np.ones(mat.shape[0], dtype=_U64)


def _check_points(params: ShareParams, points: Sequence[int]):
    if len(points) != params.n:
        raise InvalidParams(f"{len(points)} points given for n = {params.n} shares")
    if len(set(points)) != len(points):
        raise DuplicatePoints("evaluation points must be distinct")
    bad = set(points) & (set(params.embedding_points) | {0})
    if bad or any(not (0 < p < params.q) for p in points):
        raise InvalidParams(f"invalid party evaluation points {sorted(bad)}")


def share_array(
    secret: np.ndarray,
    params: ShareParams,
    rng: np.random.Generator,
    points: Sequence[int] | None = None,
) -> list[ShareArray]:
    """Split ``secret`` into ``params.n`` share arrays, one per point."""
    secret = np.asarray(secret, dtype=_U64)
    if secret.ndim != 1 or secret.size == 0:
        raise EmptySecret("secret must be a non-empty vector")
    if points is None:
        points = range(1, params.n + 1)
    points = [int(p) for p in points]
    _check_points(params, points)
    params = replace(params, secret_len=len(secret))
    gf = params.field
    k = params.pack_k
    blocks = -(-len(secret) // k)
    padded = np.zeros(blocks * k, dtype=_U64)
    padded[: len(secret)] = secret
    block_secrets = padded.reshape(blocks, k).T  # (k, blocks)

    emb = params.embedding_points
    p = np.asarray(points, dtype=_U64)
    shares = gf.matmul(lagrange_weights(gf, emb, points), block_secrets)
    n_random = params.t - 1
    if n_random:
        # f = interpolant(secrets) + Z(x) * r(x), Z vanishing on the embedding points
        q = _U64(gf.q)
        z = np.ones(len(p), dtype=_U64)
        for e in emb:
            z = gf.reduce(z * ((p + (q - _U64(e))) % q))
        vander = np.ones((len(p), n_random), dtype=_U64)
        for j in range(1, n_random):
            vander[:, j] = gf.reduce(vander[:, j - 1] * p)
        coeffs = gf.random_matrix((n_random, blocks), rng)
        noise = gf.matmul(vander, coeffs)
        shares = gf.reduce(shares + gf.reduce(noise * z[:, None]))
    return [ShareArray(pt, shares[i].copy(), params) for i, pt in enumerate(points)]


def reconstruct_array(shares: Sequence[ShareArray]) -> np.ndarray:
    """Recover the shared vector from enough share arrays."""
    shares = list(shares)
    if not shares:
        raise ThresholdNotMet("no shares supplied")
    params = shares[0].params
    if any(s.params != params for s in shares):
        raise InconsistentParams("shares come from different sharings")
    pts = [s.owner_point for s in shares]
    if len(set(pts)) != len(pts):
        raise DuplicatePoints("two shares carry the same evaluation point")
    if len(shares) < params.required:
        raise ThresholdNotMet(f"{len(shares)} shares given, {params.required} required")
    gf = params.field
    use = sorted(shares, key=lambda s: s.owner_point)[: params.required]
    w = lagrange_weights(gf, [s.owner_point for s in use], params.embedding_points)
    ys = np.stack([s.values for s in use])  # (m, blocks)
    blocks = gf.matmul(w, ys)  # (k, blocks)
    return blocks.T.reshape(-1)[: params.secret_len].copy()


def sum_share_array(shares: Sequence[ShareArray]) -> ShareArray:
    """Add one party's shares of several secrets into a share of their sum."""
    shares = list(shares)
    if not shares:
        raise InconsistentParams("nothing to sum")
    first = shares[0]
    if any(s.owner_point != first.owner_point for s in shares):
        raise MixedOwnerPoints("shares belong to different parties")
    if any(s.params != first.params for s in shares):
        raise InconsistentParams("shares come from sharings with different parameters")
    gf = first.params.field
    return ShareArray(first.owner_point, gf.vec_sum(s.values for s in shares), first.params)
