"""The segmented ("puzzle") algorithm.

[1, x] is cut into segments [x1, x2) of length delta.  Each segment gets
a dense array of 8-bit counters.  Long chains are carried from length
m + 1 to length m by dropping the largest prime and sliding; once sliding
a length up to x1 costs more than the work that length contributes to the
segment, the remaining short lengths are rebuilt from a freshly sieved
window near x1/m.  Segments are independent and can run on worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .chains import NEED_BASE, NEED_PRIMES, OK, locate_window, max_chain_length
from .primes import PrimeSource
from .stats import Histogram

COUNTER_OVERFLOW = -3
MAX_DELTA = 1 << 31


class CounterOverflow(OverflowError):
    pass


@nb.njit(cache=True, nogil=True)
def _budget(m, x1, delta):
    if x1 <= m:
        return delta
    s = delta / (m * math.log(x1 / m))
    if s >= 4.0e18:
        return 1 << 62
    return max(int(s), 1)


def compute_work_budget(m: int, x1: int, delta: int) -> int:
    """Number of slides allowed before a length is declared "short": floor(delta / (m ln(x1/m))), at least 1."""
    if m < 1 or x1 <= m:
        raise ValueError("need m >= 1 and x1 > m")
    return int(_budget(m, x1, delta))


@nb.njit(cache=True, nogil=True)
def _segment_kernel(x1, x2, P, f, info):
    delta = x2 - x1
    nP = P.shape[0]
    t = 0
    h = 0
    s = 0
    while True:
        if h >= nP:
            return NEED_PRIMES
        if s + P[h] > x2:
            break
        s += P[h]
        h += 1
    m_cut = 0
    slides = 0
    while h - t > m_cut:
        m = h - t
        budget = _budget(m, x1, delta)
        i = 0
        while s < x1:
            if h >= nP:
                return NEED_PRIMES
            i += 1
            s += P[h] - P[t]
            h += 1
            t += 1
            if i >= budget:
                m_cut = m
        slides += i
        t0 = t
        h0 = h
        s0 = s
        while s < x2:
            k = s - x1
            if f[k] == 255:
                return COUNTER_OVERFLOW
            f[k] += 1
            if h >= nP:
                return NEED_PRIMES
            s += P[h] - P[t]
            h += 1
            t += 1
        t = t0
        h = h0
        s = s0
        if m == 1:
            break
        h -= 1
        s -= P[h]
    info[0] = m_cut
    info[1] = slides
    lg = math.log(x2)
    for m in range(m_cut - 1, 0, -1):
        span = int(math.ceil(m * lg))
        lo = max(2, x1 // m - span)
        hi = x2 // m + span
        while True:
            status, Q, j0, j1 = locate_window(lo, hi, m, x1, x2, P)
            if status == NEED_BASE:
                return NEED_PRIMES
            if status == 1:
                lo = max(2, lo - (hi - lo + 1))
            elif status == 2:
                hi = hi + (hi - lo + 1)
            else:
                break
        s = 0
        for i in range(j0, j0 + m):
            s += Q[i]
        for j in range(j0, j1):
            k = s - x1
            if f[k] == 255:
                return COUNTER_OVERFLOW
            f[k] += 1
            s += Q[j + m] - Q[j]
    return OK


@dataclass
class Segment:
    """f(n) for x1 <= n < x2 in ``f_counts[n - x1]``."""

    x1: int
    x2: int
    f_counts: np.ndarray
    m_cutoff: int = 0
    slides: int = 0

    @property
    def delta(self) -> int:
        return self.x2 - self.x1

    def f(self, n: int) -> int:
        if not self.x1 <= n < self.x2:
            raise IndexError(n)
        return int(self.f_counts[n - self.x1])

    def histogram(self) -> Histogram:
        return Histogram.from_f(self.f_counts, self.x1)


def process_segment(x1: int, x2: int, x: int | None = None, src: PrimeSource | None = None) -> Segment:
    """Exact f(n) for every n in [x1, x2).

    The prime list of ``src`` is grown as needed; it must eventually
    reach the largest prime a long chain touches (a small multiple of the
    segment length in practice) and sqrt(x2).
    """
    x1, x2 = int(x1), int(x2)
    if not 2 <= x1 < x2:
        raise ValueError("need 2 <= x1 < x2")
    if x is not None and x2 > x + 1:
        raise ValueError("segment extends beyond x + 1")
    src = src or PrimeSource("list")
    need = max(4 * (x2 - x1), math.isqrt(x2) + 2, 1024)
    while True:
        P = src.ensure(need)
        f = np.zeros(x2 - x1, dtype=np.uint8)
        info = np.zeros(2, dtype=np.int64)
        status = _segment_kernel(x1, x2, P, f, info)
        if status == OK:
            return Segment(x1, x2, f, int(info[0]), int(info[1]))
        if status == COUNTER_OVERFLOW:
            raise CounterOverflow(f"some n in [{x1}, {x2}) has more than 255 representations")
        need = 2 * src.limit


@dataclass
class PuzzleConfig:
    x: int
    delta: int | None = None
    workers: int = 1
    start: int = 1

    def __post_init__(self):
        self.x, self.start = int(self.x), int(self.start)
        if self.x < 1:
            raise ValueError("x must be positive")
        if not 1 <= self.start <= self.x:
            raise ValueError("need 1 <= start <= x")
        if self.delta is None:
            self.delta = max(1, round(self.x ** (2 / 3)))
        self.delta = int(self.delta)
        M = max_chain_length(self.x)
        if self.delta < M:
            raise ValueError(f"delta={self.delta} is below M(x)={M}")
        if self.delta > MAX_DELTA:
            raise ValueError(f"delta={self.delta} exceeds the memory budget {MAX_DELTA}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def segments(self):
        x1 = max(self.start, 2)
        while x1 <= self.x:
            x2 = min(x1 + self.delta, self.x + 1)
            yield x1, x2
            x1 = x2


def run_puzzle(cfg: PuzzleConfig, src: PrimeSource | None = None, sink=None, stats: dict | None = None) -> Histogram:
    """Histogram of f(n) over cfg.start <= n <= cfg.x.

    ``sink(n0, f)`` (optional) receives every segment's counters in
    ascending order.
    """
    src = src or PrimeSource("list")
    hist = Histogram()
    if cfg.start == 1:
        first = np.zeros(1, dtype=np.uint8)  # f(1) = 0
        hist = Histogram.from_f(first, 1)
        if sink is not None:
            sink(1, first)
    cutoffs = []

    def work(bounds):
        return process_segment(bounds[0], bounds[1], cfg.x, src)

    def consume(seg):
        nonlocal hist
        hist = hist + seg.histogram()
        cutoffs.append((seg.x1, seg.m_cutoff))
        if sink is not None:
            sink(seg.x1, seg.f_counts)

    if cfg.workers == 1:
        for bounds in cfg.segments():
            consume(work(bounds))
    else:
        with ThreadPoolExecutor(cfg.workers) as pool:
            for seg in pool.map(work, cfg.segments()):
                consume(seg)
    if stats is not None:
        stats["m_cutoffs"] = cutoffs
        stats["segment_bytes"] = cfg.delta
        stats["prime_list_len"] = len(src.primes)
    return hist
