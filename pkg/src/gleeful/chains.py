"""Chains: runs of consecutive primes carried as (pmin, pmax, length, sum).

The Python-level operations here (``slide``, ``drop_largest``, ...) work on
:class:`Chain` values through a :class:`~gleeful.primes.PrimeSource`.  The
bulk constructions used by the counting algorithms run as numba kernels
over prime arrays; :func:`minimal_chains` is their entry point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numba as nb
import numpy as np

from .primes import (
    INT64_MAX,
    PrimeSource,
    base_primes,
    collect_odd_segment,
    default_source,
    mark_odd_segment,
    sieve_interval_into,
)

# status codes returned by kernels
OK = 0
NEED_BASE = -1
NEED_PRIMES = -2


@dataclass(frozen=True)
class Chain:
    pmin: int
    pmax: int
    length: int
    sum: int
    pmin_index: int | None = field(default=None, compare=False)
    pmax_index: int | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("a chain holds at least one prime")
        if self.length == 1 and not (self.pmin == self.pmax == self.sum):
            raise ValueError("a one-prime chain must have pmin == pmax == sum")

    @classmethod
    def of(cls, primes) -> "Chain":
        primes = [int(p) for p in primes]
        return cls(primes[0], primes[-1], len(primes), sum(primes))

    def primes(self, src: PrimeSource | None = None) -> list[int]:
        """Enumerate the run from pmin to pmax."""
        src = src or default_source()
        out = [self.pmin]
        while out[-1] < self.pmax:
            out.append(src.next_prime(out[-1]))
        return out


def _index(src: PrimeSource, p: int) -> int | None:
    P = src.primes
    if p > P[-1]:
        return None
    return int(np.searchsorted(P, p))


def _check_sum(s: int) -> int:
    if s > INT64_MAX:
        raise OverflowError("chain sum exceeds 64-bit range")
    return s


def slide(c: Chain, src: PrimeSource | None = None) -> Chain:
    """Drop the smallest prime and append the prime after the largest."""
    src = src or default_source()
    new_max = src.next_prime(c.pmax)
    if c.length == 1:
        return Chain(new_max, new_max, 1, new_max)
    new_min = src.next_prime(c.pmin)
    return Chain(new_min, new_max, c.length, _check_sum(c.sum - c.pmin + new_max),
                 _index(src, new_min), _index(src, new_max))


def unslide(c: Chain, src: PrimeSource | None = None) -> Chain:
    """Inverse of slide; raises NoPreviousPrime when pmin is 2."""
    src = src or default_source()
    new_min = src.prev_prime(c.pmin)
    if c.length == 1:
        return Chain(new_min, new_min, 1, new_min)
    new_max = src.prev_prime(c.pmax)
    return Chain(new_min, new_max, c.length, c.sum - c.pmax + new_min,
                 _index(src, new_min), _index(src, new_max))


def drop_largest(c: Chain, src: PrimeSource | None = None) -> Chain:
    if c.length < 2:
        raise ValueError("cannot drop the only prime of a chain")
    src = src or default_source()
    new_max = src.prev_prime(c.pmax)
    return Chain(c.pmin, new_max, c.length - 1, c.sum - c.pmax,
                 c.pmin_index, _index(src, new_max))


def build_initial_chain(x2: int, src: PrimeSource | None = None) -> Chain | None:
    """Longest run 2, 3, 5, ... whose sum is at most x2 (None when x2 < 2)."""
    if x2 < 2:
        return None
    m = max_chain_length(x2)
    P = _prefix_table(m + 1)[0]
    return Chain(2, int(P[m - 1]), m, int(P[:m].sum()), 0, m - 1)


def build_chain_of_length(m: int, x1: int, src: PrimeSource | None = None) -> Chain:
    """The length-m chain with the smallest sum that is still >= x1.

    Seeds at the largest prime below x1/m, collects m primes downward, then
    slides forward or back until the sum is minimal but not below x1.
    """
    if m < 1:
        raise ValueError("length must be positive")
    src = src or default_source()
    seed = max(x1 // m, 3)
    top = src.prev_prime(seed + 1) if seed >= 2 else 2
    run = [top]
    while len(run) < m and run[-1] > 2:
        run.append(src.prev_prime(run[-1]))
    if len(run) < m:
        # hit 2 first: start from the first m primes instead
        run = [2]
        while len(run) < m:
            run.append(src.next_prime(run[-1]))
    else:
        run.reverse()
    c = Chain.of(run)
    while c.sum < x1:
        c = slide(c, src)
    while c.pmin > 2:
        back = unslide(c, src)
        if back.sum < x1:
            break
        c = back
    return c


# ---------------------------------------------------------------------------
# M(x)

_prefix_cache: list = [np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)]


def _prefix_table(count: int):
    """First ``count`` or more primes and their running sums."""
    P, S = _prefix_cache
    if len(P) < count:
        limit = max(1 << 16, int(count * (math.log(count + 2) + math.log(math.log(count + 3)) + 3)))
        P = base_primes(limit)
        S = np.cumsum(P)
        _prefix_cache[:] = [P, S]
    return P, S


def max_chain_length(x: int, src: PrimeSource | None = None) -> int:
    """Largest M with 2 + 3 + ... + p_M <= x; 0 when x < 2."""
    if x < 2:
        return 0
    est = int(2.5 * math.sqrt(x / max(math.log(x), 1.0))) + 16
    while True:
        P, S = _prefix_table(est)
        if S[-1] > x:
            return int(np.searchsorted(S, x, side="right"))
        est = 2 * len(P)


# ---------------------------------------------------------------------------
# minimal chains: for each length m, the chain of minimal sum >= target


@nb.njit(cache=True, nogil=True)
def sweep_on_list(target, m_top, m_bottom, P, out_lo, out_hi, out_sum):
    """Walk lengths m_top..m_bottom over a stored prime list.

    Starts from the first m_top primes; each step drops the largest prime
    and slides until the sum reaches ``target``.
    """
    n = P.shape[0]
    if m_top > n:
        return NEED_PRIMES
    t = 0
    h = m_top
    s = 0
    for i in range(m_top):
        s += P[i]
    for m in range(m_top, m_bottom - 1, -1):
        while s < target:
            if h >= n:
                return NEED_PRIMES
            s += P[h] - P[t]
            h += 1
            t += 1
        out_lo[m] = P[t]
        out_hi[m] = P[h - 1]
        out_sum[m] = s
        if m > 1:
            h -= 1
            s -= P[h]
    return OK


@nb.njit(cache=True, nogil=True)
def sweep_streaming(target, m_top, m_bottom, base, seg_bits, out_lo, out_hi, out_sum):
    """Same walk as ``sweep_on_list`` but with primes sieved on the fly.

    Only the primes of the current chain and the unread tail of the last
    sieved segment are held, in a ring buffer.
    """
    R = 1
    while R < m_top + seg_bits + 8:
        R *= 2
    mask = R - 1
    ring = np.empty(R, dtype=np.int64)
    words = np.empty(seg_bits // 64 + 1, dtype=np.uint64)
    buf = np.empty(seg_bits + 1, dtype=np.int64)
    base_sq = base[base.shape[0] - 1] * base[base.shape[0] - 1]
    ring[0] = 2
    produced = 1
    next_lo = 3
    t = 0
    h = 0
    s = 0
    m = m_top
    building = True
    while True:
        if h == produced:
            hi = next_lo + 2 * (seg_bits - 1)
            if hi > base_sq:
                return NEED_BASE
            mark_odd_segment(next_lo, seg_bits, base, words)
            cnt = collect_odd_segment(next_lo, seg_bits, words, buf, 0)
            for i in range(cnt):
                ring[(produced + i) & mask] = buf[i]
            produced += cnt
            next_lo = hi + 2
            continue
        if building:
            s += ring[h & mask]
            h += 1
            if h == m_top:
                building = False
            continue
        if s < target:
            s += ring[h & mask] - ring[t & mask]
            h += 1
            t += 1
            continue
        out_lo[m] = ring[t & mask]
        out_hi[m] = ring[(h - 1) & mask]
        out_sum[m] = s
        if m == m_bottom or m == 1:
            return OK
        m -= 1
        h -= 1
        s -= ring[h & mask]


@nb.njit(cache=True, nogil=True)
def locate_window(lo, hi, m, x1, x2, base):
    """Sieve [lo, hi] and find the length-m chains with sums in [x1, x2).

    Returns (status, primes, j0, j1): chains start at indices j0 <= j < j1,
    the chain at j0 is the minimal one with sum >= x1 and the chain at j1
    is the first with sum >= x2.  Status 1 asks for a lower ``lo``, 2 for a
    higher ``hi``.
    """
    last = base[base.shape[0] - 1]
    if hi > last * last:
        return NEED_BASE, np.zeros(0, dtype=np.int64), 0, 0
    nbits = (hi - lo) // 2 + 2
    words = np.empty(nbits // 64 + 1, dtype=np.uint64)
    Q = np.empty(nbits + 1, dtype=np.int64)
    K = sieve_interval_into(lo, hi, base, words, Q)
    if K < m + 1:
        return 2, Q, 0, 0
    s = 0
    for i in range(m):
        s += Q[i]
    j = 0
    while s < x1:
        if j + m >= K:
            return 2, Q, 0, 0
        s += Q[j + m] - Q[j]
        j += 1
    if j == 0 and Q[0] != 2:
        return 1, Q, 0, 0
    j0 = j
    while s < x2:
        if j + m >= K:
            return 2, Q, 0, 0
        s += Q[j + m] - Q[j]
        j += 1
    return OK, Q[:K], j0, j


@nb.njit(cache=True, nogil=True)
def short_minimal_chains(target, m_top, base, out_lo, out_hi, out_sum):
    """Minimal chains for lengths m_top..1, each found from scratch in a window near target/m."""
    for m in range(m_top, 0, -1):
        c = target // m
        half = int(0.6 * m * math.log(max(c, 3))) + 64
        lo = max(2, c - half)
        hi = c + half
        while True:
            status, Q, j0, j1 = locate_window(lo, hi, m, target, target, base)
            if status == NEED_BASE:
                return NEED_BASE
            if status == 1:
                lo = max(2, lo - (hi - lo + 1))
                continue
            if status == 2:
                hi = hi + (hi - lo + 1)
                continue
            s = 0
            for i in range(j0, j0 + m):
                s += Q[i]
            out_lo[m] = Q[j0]
            out_hi[m] = Q[j0 + m - 1]
            out_sum[m] = s
            break
    return OK


# Below this, lengths are all handled by one sweep over a stored list.
LIST_SWEEP_LIMIT = 1 << 22


def short_cutoff(target: int) -> int:
    """Length below which chains are built from scratch rather than by sweeping."""
    if target <= LIST_SWEEP_LIMIT:
        return 1
    return max(1, round((target / math.log(target)) ** (1 / 3)))


def minimal_chains(target: int, m_top: int, cutoff: int | None = None):
    """For m = 1..m_top the length-m chain of minimal sum >= target.

    Returns three int64 arrays (pmin, pmax, sum) indexed by m; index 0 is
    unused.  Lengths >= ``cutoff`` are produced by one sweep from the
    prefix chain of length ``m_top`` downward (drop the largest prime, then
    slide); shorter ones are built from scratch near target/m.
    """
    target, m_top = int(target), int(m_top)
    lo = np.zeros(m_top + 1, dtype=np.int64)
    hi = np.zeros(m_top + 1, dtype=np.int64)
    sm = np.zeros(m_top + 1, dtype=np.int64)
    if m_top < 1:
        return lo, hi, sm
    if cutoff is None:
        cutoff = short_cutoff(target)
    cutoff = min(max(1, int(cutoff)), m_top + 1)
    if cutoff <= m_top:
        if target <= LIST_SWEEP_LIMIT:
            P = base_primes(2 * target + 1024)
            status = sweep_on_list(target, m_top, cutoff, P, lo, hi, sm)
        else:
            reach = int(3 * target / cutoff + 64 * math.log(target)) + (1 << 21)
            seg = max(1 << 12, min(1 << 20, 1 << (math.isqrt(reach).bit_length() + 2)))
            base_reach = reach
            while True:
                status = sweep_streaming(target, m_top, cutoff, base_primes(math.isqrt(base_reach) + 1),
                                         seg, lo, hi, sm)
                if status != NEED_BASE:
                    break
                base_reach *= 4
        if status != OK:
            raise RuntimeError(f"chain sweep failed with status {status}")
    if cutoff > 1:
        base_reach = 2 * target + (1 << 20)
        while True:
            status = short_minimal_chains(target, cutoff - 1, base_primes(math.isqrt(base_reach) + 1),
                                          lo, hi, sm)
            if status != NEED_BASE:
                break
            base_reach *= 4
    return lo, hi, sm
