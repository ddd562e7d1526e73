"""Prime utilities: a process-wide incremental sieve for k-th prime lookup
and Miller-Rabin primality testing."""

from __future__ import annotations

import math
import random
import threading

__all__ = ["PrimeIndexOutOfRange", "nth_prime", "is_prime", "is_prime_certain"]

DEFAULT_MAX_PRIME_INDEX = 100_000

# Deterministic for every n < 3.3e24, so in particular below 2**64.
_MR_BASES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
_U64 = 1 << 64

_lock = threading.Lock()
_primes: list[int] = [2, 3, 5, 7, 11, 13]
_limit = 16  # every prime below _limit is in _primes


class PrimeIndexOutOfRange(ValueError):
    """Raised for a prime index k outside 1..max_prime_index."""

    def __init__(self, k, max_index):
        super().__init__(k, max_index)
        self.k = k
        self.max_index = max_index

    def __str__(self):
        return f"prime index {self.k} outside [1, {self.max_index}]"


def _sieve(limit: int) -> list[int]:
    flags = bytearray([1]) * limit
    flags[0:2] = b"\x00\x00"
    for p in range(2, math.isqrt(limit - 1) + 1):
        if flags[p]:
            flags[p * p::p] = bytes(len(range(p * p, limit, p)))
    return [i for i, f in enumerate(flags) if f]


def _extend_to(k: int) -> None:
    global _primes, _limit
    with _lock:
        if len(_primes) >= k:
            return
        # Rosser's bound p_k < k (ln k + ln ln k) for k >= 6
        want = max(_limit * 2, int(k * (math.log(k) + math.log(math.log(k)))) + 16)
        while True:
            found = _sieve(want)
            if len(found) >= k:
                break
            want *= 2
        # readers index the old list concurrently; publish a new one
        _primes = found
        _limit = want


def nth_prime(k: int, max_index: int = DEFAULT_MAX_PRIME_INDEX) -> int:
    """Return the k-th prime, 1-based: ``nth_prime(1) == 2``."""
    if k < 1 or k > max_index:
        raise PrimeIndexOutOfRange(k, max_index)
    primes = _primes
    if k > len(primes):
        _extend_to(k)
        primes = _primes
    return primes[k - 1]


def _mr_round(n: int, d: int, s: int, a: int) -> bool:
    x = pow(a, d, n)
    if x == 1 or x == n - 1:
        return True
    for _ in range(s - 1):
        x = x * x % n
        if x == n - 1:
            return True
    return False


def is_prime_certain(n: int, rounds: int = 24) -> tuple[bool, bool]:
    """Primality of n plus whether the answer is certain.

    Below 2**64 the fixed witness set makes Miller-Rabin deterministic.
    Above it, ``rounds`` extra witnesses are drawn from an RNG seeded by n,
    so the result is reproducible but only probabilistic.
    """
    if n < 2:
        return False, True
    for p in _MR_BASES:
        if n % p == 0:
            return n == p, True
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_BASES:
        if not _mr_round(n, d, s, a):
            return False, True
    if n < _U64:
        return True, True
    rng = random.Random(n)
    for _ in range(rounds):
        if not _mr_round(n, d, s, rng.randrange(2, n - 1)):
            return False, True
    return True, False


def is_prime(n: int) -> bool:
    return is_prime_certain(n)[0]
