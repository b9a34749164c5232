"""Prime enumeration backed by a segmented sieve of Eratosthenes.

A module-level :class:`PrimeSieve` caches every prime up to the largest
bound requested so far; interval queries above the cache fall back to a
segmented sieve over ``(lo, hi]`` only.
"""

from __future__ import annotations

import math
import threading

import numpy as np

DEFAULT_LIMIT = 10**7


def simple_sieve(limit: int) -> np.ndarray:
    """All primes ``<= limit`` as an int64 array."""
    if limit < 2:
        return np.array([], dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    is_prime[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if is_prime[p]:
            is_prime[p * p :: 2 * p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


def segmented_primes(lo: int, hi: int, segment: int = 1 << 20) -> np.ndarray:
    """Primes ``p`` with ``lo < p <= hi``, sieving only that window."""
    lo = max(int(lo), 1)
    hi = int(hi)
    if hi <= lo or hi < 2:
        return np.array([], dtype=np.int64)
    base = simple_sieve(math.isqrt(hi))
    out = []
    start = lo + 1
    while start <= hi:
        stop = min(start + segment, hi + 1)  # exclusive
        mask = np.ones(stop - start, dtype=bool)
        for p in base:
            p = int(p)
            first = max(p * p, ((start + p - 1) // p) * p)
            if first >= stop:
                if p * p >= stop:
                    break
                continue
            mask[first - start :: p] = False
        nums = np.arange(start, stop, dtype=np.int64)
        keep = mask & (nums >= 2)
        out.append(nums[keep])
        start = stop
    return np.concatenate(out) if out else np.array([], dtype=np.int64)


class SieveLimitError(ValueError):
    """Requested primes beyond the configured sieve limit."""


class PrimeSieve:
    """Growable, read-only-after-growth cache of small primes."""

    def __init__(self, limit: int = DEFAULT_LIMIT):
        self.limit = int(limit)
        self._primes = simple_sieve(1000)
        self._upto = 1000
        self._lock = threading.Lock()

    def _ensure(self, n: int) -> None:
        if n > self.limit:
            raise SieveLimitError(f"prime bound {n} exceeds sieve limit {self.limit}")
        if n <= self._upto:
            return
        with self._lock:
            if n <= self._upto:
                return
            # grow geometrically so repeated small extensions stay cheap
            target = min(self.limit, max(n, 2 * self._upto))
            extra = segmented_primes(self._upto, target)
            self._primes = np.concatenate([self._primes, extra])
            self._upto = target

    def primes_upto(self, n: float) -> np.ndarray:
        n = int(math.floor(n))
        if n < 2:
            return np.array([], dtype=np.int64)
        self._ensure(n)
        k = np.searchsorted(self._primes, n, side="right")
        return self._primes[:k]

    def primes_between(self, lo: float, hi: float) -> np.ndarray:
        """Primes in the half-open interval ``(lo, hi]``."""
        lo_i, hi_i = int(math.floor(lo)), int(math.floor(hi))
        if hi_i <= lo_i:
            return np.array([], dtype=np.int64)
        if hi_i <= self._upto or hi_i <= self.limit:
            ps = self.primes_upto(hi_i)
            return ps[np.searchsorted(ps, lo_i, side="right") :]
        return segmented_primes(lo_i, hi_i)

    def pi(self, n: float) -> int:
        return int(self.primes_upto(n).size)


_default = PrimeSieve()


def default_sieve() -> PrimeSieve:
    return _default


def primes_upto(n: float) -> np.ndarray:
    return _default.primes_upto(n)


def primes_between(lo: float, hi: float) -> np.ndarray:
    return _default.primes_between(lo, hi)


def prime_power(n: int) -> tuple[int, int] | None:
    """Return ``(p, l)`` with ``n = p**l``, or ``None`` if ``n`` is not a prime power."""
    n = int(n)
    if n < 2:
        return None
    for p in range(2, math.isqrt(n) + 1):
        if n % p == 0:
            l = 0
            while n % p == 0:
                n //= p
                l += 1
            return (p, l) if n == 1 else None
    return (n, 1)
