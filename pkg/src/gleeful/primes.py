"""Prime generation and testing.

Everything the two counting algorithms need from the primes lives here:
a plain sieve for a bounded list, a segmented sieve for arbitrary
intervals, a deterministic Miller-Rabin test for 64-bit integers, and
next/previous-prime queries served by a :class:`PrimeSource`.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numba as nb
import numpy as np

INT64_MAX = (1 << 63) - 1

# Largest bound sieve_upto will allocate for (about 0.5 GB of flags).
MAX_SIEVE_LIMIT = 10**9

SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47,
                53, 59, 61, 67, 71, 73, 79, 83, 89, 97)

# Sinclair's witnesses; correct for every n < 2**64.
WITNESSES = (2, 325, 9375, 28178, 450775, 9780504, 1795265022)

_SMALL = np.array(SMALL_PRIMES, dtype=np.int64)
_WITNESSES = np.array(WITNESSES, dtype=np.int64)
_WHEEL30 = np.zeros(30, dtype=np.uint8)
for _r in (1, 7, 11, 13, 17, 19, 23, 29):
    _WHEEL30[_r] = 1

_DEBRUIJN = 0x03F79D71B4CB0A89
_DEBRUIJN_TABLE = np.zeros(64, dtype=np.int64)
for _i in range(64):
    _DEBRUIJN_TABLE[(((1 << _i) * _DEBRUIJN) & 0xFFFFFFFFFFFFFFFF) >> 58] = _i


class CapacityError(MemoryError):
    """A sieve bound exceeds the configured memory budget."""


class NoPreviousPrime(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PrimeList:
    """All primes up to ``limit``, ascending, as an int64 array."""

    primes: np.ndarray
    limit: int

    def __len__(self) -> int:
        return len(self.primes)

    def __contains__(self, n: int) -> bool:
        if n > self.limit:
            raise ValueError(f"{n} is beyond the sieved limit {self.limit}")
        i = np.searchsorted(self.primes, n)
        return bool(i < len(self.primes) and self.primes[i] == n)

    def tolist(self) -> list[int]:
        return self.primes.tolist()


def sieve_upto(limit: int, max_limit: int = MAX_SIEVE_LIMIT) -> PrimeList:
    """Sieve of Eratosthenes over odd numbers."""
    if limit < 2:
        return PrimeList(np.zeros(0, dtype=np.int64), max(int(limit), 0))
    if limit > max_limit:
        raise CapacityError(f"sieve limit {limit} exceeds budget {max_limit}")
    limit = int(limit)
    # flags[i] stands for 2*i + 1
    flags = np.ones(limit // 2 + 1 - (limit % 2 == 0), dtype=np.bool_)
    flags[0] = False
    for i in range(1, (math.isqrt(limit) - 1) // 2 + 1):
        if flags[i]:
            p = 2 * i + 1
            flags[p * p // 2::p] = False
    odd = 2 * np.flatnonzero(flags).astype(np.int64) + 1
    primes = np.empty(len(odd) + 1, dtype=np.int64)
    primes[0] = 2
    primes[1:] = odd
    return PrimeList(primes, limit)


@lru_cache(maxsize=8)
def _base_primes_cached(limit: int) -> np.ndarray:
    return sieve_upto(limit).primes


def base_primes(limit: int) -> np.ndarray:
    """Primes up to at least ``limit``; bounds are rounded up so repeat calls share a cache."""
    return _base_primes_cached(max(1 << 16, 1 << max(limit, 1).bit_length()))


# ---------------------------------------------------------------------------
# segmented sieve kernels (odd numbers only, one bit per odd, set = composite)


@nb.njit(cache=True, nogil=True)
def mark_odd_segment(lo, nbits, base, words):
    """Mark composites among lo, lo+2, ..., lo+2*(nbits-1); ``lo`` must be odd.

    ``base`` must hold every odd prime up to the square root of the
    segment's last number.  ``words`` is cleared here.
    """
    for w in range(words.shape[0]):
        words[w] = 0
    hi = lo + 2 * (nbits - 1)
    one = np.uint64(1)
    for k in range(base.shape[0]):
        p = base[k]
        if p == 2:
            continue
        pp = p * p
        if pp > hi:
            break
        if pp >= lo:
            start = pp
        else:
            r = lo % p
            start = lo if r == 0 else lo + (p - r)
            if start % 2 == 0:
                start += p
        j = (start - lo) >> 1
        while j < nbits:
            words[j >> 6] |= one << np.uint64(j & 63)
            j += p
    if lo == 1:
        words[0] |= one


@nb.njit(cache=True, nogil=True)
def lowest_bit(x):
    low = x & (~x + np.uint64(1))
    return _DEBRUIJN_TABLE[(low * np.uint64(_DEBRUIJN)) >> np.uint64(58)]


@nb.njit(cache=True, nogil=True)
def collect_odd_segment(lo, nbits, words, out, count):
    """Append the unmarked numbers of a segment to ``out[count:]``; returns the new count."""
    full = np.uint64(0xFFFFFFFFFFFFFFFF)
    for w in range(words.shape[0]):
        x = words[w] ^ full
        while x != 0:
            b = lowest_bit(x)
            i = w * 64 + b
            if i >= nbits:
                return count
            out[count] = lo + 2 * i
            count += 1
            x &= x - np.uint64(1)
    return count


@nb.njit(cache=True, nogil=True)
def sieve_interval_into(a, b, base, words, out):
    """Write the primes in [a, b] into ``out``; returns how many.

    ``out`` must be large enough for every odd number of the interval plus
    one; ``words`` must cover the whole interval's odd numbers.
    """
    count = 0
    if b < 2 or b < a:
        return 0
    if a <= 2:
        out[0] = 2
        count = 1
        a = 3
    if a % 2 == 0:
        a += 1
    if a > b:
        return count
    nbits = (b - a) // 2 + 1
    mark_odd_segment(a, nbits, base, words)
    return collect_odd_segment(a, nbits, words, out, count)


@nb.njit(cache=True, nogil=True)
def _sieve_chunk(lo, hi, base):
    nbits = (hi - lo) // 2 + 2
    words = np.empty(nbits // 64 + 1, dtype=np.uint64)
    out = np.empty(nbits + 1, dtype=np.int64)
    n = sieve_interval_into(lo, hi, base, words, out)
    return out[:n].copy()


def primes_in_interval(a: int, b: int) -> np.ndarray:
    """Primes p with a <= p <= b, by a segmented sieve with base primes up to sqrt(b)."""
    a, b = int(a), int(b)
    if b < a or b < 2:
        return np.zeros(0, dtype=np.int64)
    if b > INT64_MAX:
        raise OverflowError("interval end beyond 64-bit range")
    a = max(a, 2)
    base = base_primes(math.isqrt(b) + 1)
    seg = max(math.isqrt(b), 1 << 15) * 2
    parts = []
    lo = a
    while lo <= b:
        hi = min(b, lo + seg - 1)
        parts.append(_sieve_chunk(lo, hi, base))
        lo = hi + 1
    if len(parts) == 1:
        return parts[0]
    return np.concatenate(parts)


# ---------------------------------------------------------------------------
# primality


def is_prime(n: int) -> bool:
    """Deterministic for every n < 2**64: trial division by primes below 100, then Miller-Rabin."""
    n = int(n)
    if n < 2:
        return False
    if n >= 1 << 64:
        raise ValueError("is_prime is only deterministic below 2**64")
    for p in SMALL_PRIMES:
        if n % p == 0:
            return n == p
    if n < 101 * 101:
        return True
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in WITNESSES:
        a %= n
        if a == 0:
            continue
        x = pow(a, d, n)
        if x == 1 or x == n - 1:
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


@nb.njit(cache=True, nogil=True)
def mulmod(a, b, m):
    # operands already reduced below m < 2**63
    if m < 3037000499:
        return (a * b) % m
    if m < (1 << 50):
        q = np.int64(float(a) * float(b) / float(m))
        r = a * b - q * m  # wraps; the true remainder is within a few m of r
        while r < 0:
            r += m
        while r >= m:
            r -= m
        return r
    r = 0
    while b > 0:
        if b & 1:
            if r >= m - a:
                r -= m - a
            else:
                r += a
        if a >= m - a:
            a -= m - a
        else:
            a += a
        b >>= 1
    return r


@nb.njit(cache=True, nogil=True)
def powmod(a, e, m):
    r = 1 % m
    a %= m
    while e > 0:
        if e & 1:
            r = mulmod(r, a, m)
        a = mulmod(a, a, m)
        e >>= 1
    return r


@nb.njit(cache=True, nogil=True)
def strong_probable_prime(n, a):
    """Strong probable-prime test of odd n > 2 to base a."""
    a %= n
    if a == 0:
        return True
    d = n - 1
    s = 0
    while d & 1 == 0:
        d >>= 1
        s += 1
    x = powmod(a, d, n)
    if x == 1 or x == n - 1:
        return True
    for _ in range(s - 1):
        x = mulmod(x, x, n)
        if x == n - 1:
            return True
    return False


@nb.njit(cache=True, nogil=True)
def is_prime_kernel(n):
    if n < 2:
        return False
    for k in range(_SMALL.shape[0]):
        p = _SMALL[k]
        if n % p == 0:
            return n == p
    if n < 10201:
        return True
    if not strong_probable_prime(n, 2):
        return False
    for k in range(1, _WITNESSES.shape[0]):
        if not strong_probable_prime(n, _WITNESSES[k]):
            return False
    return True


@nb.njit(cache=True, nogil=True)
def next_prime_tested(n):
    """Smallest prime > n via windowed sieving and Miller-Rabin."""
    if n < 97:
        for k in range(_SMALL.shape[0]):
            if _SMALL[k] > n:
                return _SMALL[k]
    ln = math.log(n)
    w = max(int(math.ceil(2.0 * ln)), 8)
    plim = int(ln)
    flags = np.empty(w, dtype=np.uint8)
    lo = n + 1
    while True:
        if lo > 9223372036854775807 - w:
            raise OverflowError("next prime beyond 64-bit range")
        flags[:] = 1
        for k in range(_SMALL.shape[0]):
            p = _SMALL[k]
            if p > plim:
                break
            start = ((lo + p - 1) // p) * p - lo
            for j in range(start, w, p):
                flags[j] = 0
        for i in range(w):
            if flags[i]:
                v = lo + i
                if _WHEEL30[v % 30] and is_prime_kernel(v):
                    return v
        lo += w


@nb.njit(cache=True, nogil=True)
def prev_prime_tested(n):
    """Largest prime < n (n >= 3), mirror of next_prime_tested."""
    if n <= 101:
        for k in range(_SMALL.shape[0] - 1, -1, -1):
            if _SMALL[k] < n:
                return _SMALL[k]
    ln = math.log(n)
    w = max(int(math.ceil(2.0 * ln)), 8)
    plim = int(ln)
    flags = np.empty(w, dtype=np.uint8)
    hi = n - 1  # window is [hi - w + 1, hi]
    while True:
        lo = hi - w + 1
        flags[:] = 1
        for k in range(_SMALL.shape[0]):
            p = _SMALL[k]
            if p > plim:
                break
            start = ((lo + p - 1) // p) * p - lo
            for j in range(start, w, p):
                flags[j] = 0
        for i in range(w - 1, -1, -1):
            if flags[i]:
                v = lo + i
                if v <= 97:
                    if is_prime_kernel(v):
                        return v
                elif _WHEEL30[v % 30] and is_prime_kernel(v):
                    return v
        hi = lo - 1


# ---------------------------------------------------------------------------
# prime sources


class PrimeSource:
    """Answers next/previous-prime queries.

    Below ``bound`` every query is a lookup in a stored prime list.  At
    or above it the answer comes from the list (``"list"``, which grows on
    demand), from sieving a short window (``"sieve"``), or from sieving a
    ``2 ln n`` window with small primes and running Miller-Rabin on the
    survivors (``"test"``).
    """

    MODES = ("list", "sieve", "test")

    def __init__(self, mode: str = "list", bound: int = 1 << 16):
        if mode not in self.MODES:
            raise ValueError(f"unknown prime source mode {mode!r}")
        if bound < 2:
            raise ValueError("bound must be at least 2")
        self.mode = mode
        self.bound = int(bound)
        self._list = sieve_upto(max(self.bound, 128))
        self._lock = threading.Lock()

    def __repr__(self) -> str:
        return f"PrimeSource(mode={self.mode!r}, bound={self.bound})"

    @property
    def primes(self) -> np.ndarray:
        return self._list.primes

    @property
    def limit(self) -> int:
        return self._list.limit

    def ensure(self, limit: int) -> np.ndarray:
        """Grow the stored list (by doubling) until it covers ``limit``; returns it."""
        with self._lock:
            if self._list.limit < limit:
                new = self._list.limit
                while new < limit:
                    new *= 2
                self._list = sieve_upto(new)
                if self.mode == "list":
                    self.bound = max(self.bound, new)
        return self._list.primes

    def next_prime(self, n: int) -> int:
        n = int(n)
        if n < 2:
            return 2
        P = self._list.primes
        if n < self.bound and n < P[-1]:
            return int(P[np.searchsorted(P, n, side="right")])
        if self.mode == "list":
            P = self.ensure(2 * n + 2)
            return int(P[np.searchsorted(P, n, side="right")])
        if n >= INT64_MAX:
            raise OverflowError("next prime beyond 64-bit range")
        if self.mode == "test":
            return int(next_prime_tested(n))
        width = max(64, 2 * math.ceil(math.log(n)))
        lo = n + 1
        while True:
            hi = min(lo + width - 1, INT64_MAX)
            found = primes_in_interval(lo, hi)
            if len(found):
                return int(found[0])
            if hi == INT64_MAX:
                raise OverflowError("next prime beyond 64-bit range")
            lo, width = hi + 1, width * 2

    def prev_prime(self, n: int) -> int:
        n = int(n)
        if n <= 2:
            raise NoPreviousPrime(f"no prime below {n}")
        P = self._list.primes
        if n - 1 <= self._list.limit and (n <= self.bound or self.mode == "list"):
            return int(P[np.searchsorted(P, n, side="left") - 1])
        if self.mode == "list":
            P = self.ensure(n)
            return int(P[np.searchsorted(P, n, side="left") - 1])
        if n > INT64_MAX:
            raise OverflowError("argument beyond 64-bit range")
        if self.mode == "test":
            return int(prev_prime_tested(n))
        width = max(64, 2 * math.ceil(math.log(n)))
        hi = n - 1
        while True:
            lo = max(2, hi - width + 1)
            found = primes_in_interval(lo, hi)
            if len(found):
                return int(found[-1])
            hi, width = lo - 1, width * 2


_default: PrimeSource | None = None


def default_source() -> PrimeSource:
    global _default
    if _default is None:
        _default = PrimeSource("list", 1 << 16)
    return _default


def next_prime(n: int, src: PrimeSource | None = None) -> int:
    return (src or default_source()).next_prime(n)


def prev_prime(n: int, src: PrimeSource | None = None) -> int:
    return (src or default_source()).prev_prime(n)
