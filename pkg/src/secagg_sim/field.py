"""Prime-field arithmetic over scalars and numpy vectors.

Field elements are plain Python ints in ``[0, q)``; field vectors are 1-D
``numpy.uint64`` arrays holding canonical residues. Keeping ``q < 2**32`` means
the product of two residues always fits in 64 bits, so elementwise arithmetic
never needs arbitrary-precision integers.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, InversionOfZero, LengthMismatch

DEFAULT_Q = 2**31 - 1

_U64 = np.uint64
# inner-dimension chunk for the float64 limb products: 2**20 * (2**16)**2 < 2**53
_MATMUL_CHUNK = 1 << 20


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin, exact for all n < 3.3e24."""
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41)
    for p in small:
        if n % p == 0:
            return n == p
    d, r = n - 1, 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@dataclass(frozen=True)
class PrimeField:
    """The field F_q for a prime 2 < q < 2**32."""

    q: int = DEFAULT_Q

    def __post_init__(self):
        if not (2 < self.q < 2**32) or not is_prime(self.q):
            raise ValueError(f"q must be a prime in (2, 2**32), got {self.q}")

    @cached_property
    def mersenne_exponent(self) -> int | None:
        """p such that q == 2**p - 1, or None."""
        p = self.q.bit_length()
        return p if self.q == (1 << p) - 1 else None

    @property
    def element_bytes(self) -> int:
        return 4

    # -- scalars ---------------------------------------------------------

    def element(self, value: int) -> int:
        return int(value) % self.q

    def add(self, a: int, b: int) -> int:
        s = a + b
        return s - self.q if s >= self.q else s

    def sub(self, a: int, b: int) -> int:
        s = a - b
        return s + self.q if s < 0 else s

    def neg(self, a: int) -> int:
        return self.q - a if a else 0

    def mul(self, a: int, b: int) -> int:
        x = a * b
        p = self.mersenne_exponent
        if p is None:
            return x % self.q
        x = (x & self.q) + (x >> p)
        x = (x & self.q) + (x >> p)
        return x - self.q if x >= self.q else x

    def inv(self, a: int) -> int:
        if a % self.q == 0:
            raise InversionOfZero("0 has no multiplicative inverse")
        return pow(a, self.q - 2, self.q)

    # -- vectors ---------------------------------------------------------

    def reduce(self, x: np.ndarray) -> np.ndarray:
        """Canonicalize a uint64 array of arbitrary residues."""
        x = np.asarray(x, dtype=_U64)
        p = self.mersenne_exponent
        if p is None:
            return x % _U64(self.q)
        q, sh = _U64(self.q), _U64(p)
        x = (x & q) + (x >> sh)
        x = (x & q) + (x >> sh)
        return np.where(x >= q, x - q, x)

    def vector(self, values: Iterable[int] | np.ndarray) -> np.ndarray:
        """Build a canonical field vector from integers (negatives allowed)."""
        arr = np.asarray(values if not isinstance(values, range) else list(values))
        if arr.size == 0:
            return np.zeros(arr.shape, dtype=_U64)
        if arr.dtype == _U64:
            return arr % _U64(self.q)
        if arr.dtype == object:
            return np.array([int(v) % self.q for v in arr.ravel()], dtype=_U64).reshape(arr.shape)
        return (arr.astype(np.int64) % self.q).astype(_U64)

    def zeros(self, length: int) -> np.ndarray:
        return np.zeros(length, dtype=_U64)

    def _check_len(self, a: np.ndarray, b: np.ndarray):
        if a.shape != b.shape:
            raise LengthMismatch(f"length {a.shape} != {b.shape}")

    def vec_add(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        self._check_len(a, b)
        s = a + b
        q = _U64(self.q)
        return np.where(s >= q, s - q, s)

    def vec_sub(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        self._check_len(a, b)
        q = _U64(self.q)
        s = a + (q - b)
        return np.where(s >= q, s - q, s)

    def vec_neg(self, a: np.ndarray) -> np.ndarray:
        q = _U64(self.q)
        return np.where(a == 0, a, q - a)

    def vec_mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        self._check_len(a, b)
        return self.reduce(a * b)

    def vec_scale(self, a: np.ndarray, c: int) -> np.ndarray:
        return self.reduce(a * _U64(c % self.q))

    def vec_pow(self, a: np.ndarray, e: int) -> np.ndarray:
        result = np.ones_like(np.asarray(a, dtype=_U64))
        base = np.asarray(a, dtype=_U64)
        while e:
            if e & 1:
                result = self.reduce(result * base)
            base = self.reduce(base * base)
            e >>= 1
        return result

    def vec_inv(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=_U64)
        if np.any(a == 0):
            raise InversionOfZero("0 has no multiplicative inverse")
        if a.size <= 512:  # interpreter pow beats 60 array passes on short inputs
            q = self.q
            return np.array([pow(int(v), q - 2, q) for v in a.ravel()], dtype=_U64).reshape(a.shape)
        return self.vec_pow(a, self.q - 2)

    def vec_sum(self, vectors: Iterable[np.ndarray], length: int | None = None) -> np.ndarray:
        """Elementwise sum; an empty input yields the zero vector of ``length``."""
        acc = None
        pending = 0
        for v in vectors:
            if acc is None:
                acc = np.array(v, dtype=_U64)
                if length is not None and acc.shape != (length,):
                    raise LengthMismatch(f"expected length {length}, got {acc.shape}")
                continue
            self._check_len(acc, v)
            acc += v
            pending += 1
            # each addend < 2**32; fold before the accumulator can wrap
            if pending == (1 << 31) - 1:
                acc = self.reduce(acc)
                pending = 0
        if acc is None:
            if length is None:
                raise LengthMismatch("empty sum needs an explicit length")
            return self.zeros(length)
        return self.reduce(acc)

    # -- linear algebra --------------------------------------------------

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Exact ``a @ b mod q`` using 16-bit limbs and float64 BLAS."""
        a = np.asarray(a, dtype=_U64)
        b = np.asarray(b, dtype=_U64)
        vec_out = b.ndim == 1
        if vec_out:
            b = b[:, None]
        if a.ndim != 2 or a.shape[1] != b.shape[0]:
            raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
        m, c = a.shape[0], b.shape[1]
        inner = a.shape[1]
        hh = np.zeros((m, c), dtype=_U64)
        mid = np.zeros((m, c), dtype=_U64)
        ll = np.zeros((m, c), dtype=_U64)
        mask = _U64(0xFFFF)
        for start in range(0, inner, _MATMUL_CHUNK):
            sl = slice(start, start + _MATMUL_CHUNK)
            ah = (a[:, sl] >> _U64(16)).astype(np.float64)
            al = (a[:, sl] & mask).astype(np.float64)
            bh = (b[sl] >> _U64(16)).astype(np.float64)
            bl = (b[sl] & mask).astype(np.float64)
            hh = self.reduce(hh + (ah @ bh).astype(_U64))
            mid = self.reduce(mid + (ah @ bl).astype(_U64) + (al @ bh).astype(_U64))
            ll = self.reduce(ll + (al @ bl).astype(_U64))
        r32 = _U64((1 << 32) % self.q)
        out = self.reduce(self.reduce(hh * r32) + self.reduce(mid << _U64(16)) + ll)
        return out[:, 0] if vec_out else out

    def matvec(self, a: np.ndarray, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=_U64)
        if s.ndim != 1:
            raise DimensionMismatch("matvec expects a vector operand")
        return self.matmul(a, s)

    # -- randomness ------------------------------------------------------

    def random_vector(self, length: int, rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, self.q, size=length, dtype=_U64)

    def random_matrix(self, shape: Sequence[int], rng: np.random.Generator) -> np.ndarray:
        return rng.integers(0, self.q, size=tuple(shape), dtype=_U64)

    def centered(self, v: np.ndarray) -> np.ndarray:
        """Map residues to signed representatives in (-q/2, q/2]."""
        v = np.asarray(v, dtype=np.int64)
        return np.where(v > self.q // 2, v - self.q, v)


GF = PrimeField()
