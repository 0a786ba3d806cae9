"""Harary graphs H(k, n): minimal k-connected graphs on n vertices.

Even k: the circulant ring where vertex i is joined to i +- 1, ..., i +- k/2.
Odd k: the ring for k - 1 plus "diameter" edges i -- i + n//2 (one vertex has
degree k + 1 when n is odd). k = 1 gives the path. k = n - 1 is complete.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..errors import InvalidDegree


def _check(n: int, k: int):
    if k < 1 or k >= n:
        raise InvalidDegree(f"need 1 <= k < n, got k={k}, n={n}")


def harary_neighbors(n: int, k: int, v: int) -> tuple[int, ...]:
    """Neighbors of vertex ``v`` in H(k, n), computed in O(k)."""
    _check(n, k)
    if k == 1:
        return tuple(u for u in (v - 1, v + 1) if 0 <= u < n)
    offset = k // 2
    nb = set()
    for d in range(1, offset + 1):
        nb.add((v + d) % n)
        nb.add((v - d) % n)
    if k % 2:
        half = n // 2
        if n % 2 == 0:
            nb.add((v + half) % n)
        else:
            if v <= half:
                nb.add((v + half) % n)
            src = (v - half) % n
            if src <= half:
                nb.add(src)
    nb.discard(v)
    return tuple(sorted(nb))


@dataclass(frozen=True)
class HararyGraph:
    n: int
    k: int
    adjacency: tuple[tuple[int, ...], ...]

    def neighbors(self, v: int) -> tuple[int, ...]:
        return self.adjacency[v]

    def degrees(self) -> list[int]:
        return [len(a) for a in self.adjacency]

    def edges(self) -> set[tuple[int, int]]:
        return {(u, v) for u, nb in enumerate(self.adjacency) for v in nb if u < v}

    def is_connected(self, removed: Iterable[int] = ()) -> bool:
        gone = set(removed)
        alive = [v for v in range(self.n) if v not in gone]
        if not alive:
            return True
        seen = {alive[0]}
        todo = deque(seen)
        while todo:
            u = todo.popleft()
            for w in self.adjacency[u]:
                if w not in gone and w not in seen:
                    seen.add(w)
                    todo.append(w)
        return len(seen) == len(alive)


def harary(n: int, k: int) -> HararyGraph:
    _check(n, k)
    return HararyGraph(n, k, tuple(harary_neighbors(n, k, v) for v in range(n)))


def relabeling(n: int, seed: int) -> np.ndarray:
    """Seeded random vertex permutation, used to place clients on the ring at random."""
    return np.random.default_rng(seed).permutation(n)


class ClientGraph:
    """Harary graph over client ids 1..n, optionally with a seeded random placement."""

    def __init__(self, n: int, k: int, seed: int | None = None):
        self.n, self.k = n, k
        if seed is None:
            self._pos = self._client = None
        else:
            self._client = relabeling(n, seed)  # ring position -> client index
            self._pos = np.empty(n, dtype=np.int64)
            self._pos[self._client] = np.arange(n)

    def neighbors(self, client: int) -> tuple[int, ...]:
        v = client - 1
        if self._pos is None:
            return tuple(u + 1 for u in harary_neighbors(self.n, self.k, v))
        ring = harary_neighbors(self.n, self.k, int(self._pos[v]))
        return tuple(sorted(int(self._client[u]) + 1 for u in ring))
