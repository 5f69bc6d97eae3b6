"""The priority-queue algorithm.

One live chain per length is kept in a min-priority queue keyed by its
sum.  Sweeping n upward, every chain whose sum equals n is popped,
counted towards f(n), slid, and pushed back while its sum stays below
the interval end.  Intervals [x1, x2) are independent: each builds its
own chain array, so disjoint intervals can run in parallel.

Chain ends below the prime bound B step through a stored list.  Above B
they either own a small incremental sieve (``"sieve"`` backend) or find
the next prime by windowed sieving plus Miller-Rabin (``"test"``).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba as nb
import numpy as np

from .chains import NEED_PRIMES, OK, Chain, max_chain_length, minimal_chains
from .primes import PrimeSource, lowest_bit, mark_odd_segment, next_prime_tested
from .stats import Histogram

NEED_SLOTS = -4
COUNTER_OVERFLOW = -3
CORRUPT = -5

LIST, SIEVE, TEST = 0, 1, 2
_MODE_CODE = {"list": LIST, "sieve": SIEVE, "test": TEST}

# chain array columns
LO, HI, SUM, LO_IDX, HI_IDX, LO_CUR, HI_CUR = range(7)

# cursor table columns
C_LO, C_POS, C_OFF, C_NW = range(4)

# meta slots
POOL_USED, SIZE, OVF_SIZE, RESUME = range(4)

BLOCK = 1 << 20


class QueueCorruption(RuntimeError):
    pass


class ChainArray:
    """Chains indexed by length 1..M; entry 0 is unused."""

    def __init__(self, table: np.ndarray):
        self.table = table

    def __len__(self) -> int:
        return self.table.shape[0] - 1

    @property
    def M(self) -> int:
        return len(self)

    def __getitem__(self, m: int) -> Chain:
        if not 1 <= m <= len(self):
            raise IndexError(m)
        r = self.table[m]
        return Chain(int(r[LO]), int(r[HI]), m, int(r[SUM]))

    def __iter__(self):
        return (self[m] for m in range(1, len(self) + 1))


def setup_chain_array(x1: int, x2: int, src: PrimeSource | None = None) -> ChainArray:
    """For each m in 1..M(x2), the length-m chain of minimal sum >= x1.

    Lengths from round(x1**(1/3)) up are produced by drop-largest-then-slide
    from the next longer chain; shorter ones from scratch near x1/m.
    """
    if not 1 <= x1 < x2:
        raise ValueError("need 1 <= x1 < x2")
    M = max_chain_length(x2)
    lo, hi, sm = minimal_chains(x1, M, cutoff=max(1, round(x1 ** (1 / 3))))
    table = np.full((M + 1, 7), -1, dtype=np.int64)
    table[:, LO] = lo
    table[:, HI] = hi
    table[:, SUM] = sm
    table[0, :] = 0
    return ChainArray(table)


# ---------------------------------------------------------------------------
# kernels


@nb.njit(cache=True, nogil=True)
def _cursor_fill(slot, lo, cur, pool, base):
    off = cur[slot, C_OFF]
    nw = cur[slot, C_NW]
    cur[slot, C_LO] = lo
    cur[slot, C_POS] = -1
    mark_odd_segment(lo, nw * 64, base, pool[off:off + nw])


@nb.njit(cache=True, nogil=True)
def _cursor_next(slot, cur, pool, base):
    full = np.uint64(0xFFFFFFFFFFFFFFFF)
    off = cur[slot, C_OFF]
    nw = cur[slot, C_NW]
    while True:
        i = cur[slot, C_POS] + 1
        w = i >> 6
        if w < nw:
            x = (pool[off + w] ^ full) & ~((np.uint64(1) << np.uint64(i & 63)) - np.uint64(1))
            while True:
                if x != 0:
                    j = w * 64 + lowest_bit(x)
                    cur[slot, C_POS] = j
                    return cur[slot, C_LO] + 2 * j
                w += 1
                if w >= nw:
                    break
                x = pool[off + w] ^ full
        _cursor_fill(slot, cur[slot, C_LO] + 2 * nw * 64, cur, pool, base)


@nb.njit(cache=True, nogil=True)
def _words_needed(ch, m, nB, mode, words_for):
    if mode != SIEVE:
        return 0
    need = 0
    for e in range(2):
        if ch[m, LO_CUR + e] < 0:
            idx = ch[m, LO_IDX + e]
            if idx < 0 or idx + 1 >= nB:
                need += words_for[m]
    return need


@nb.njit(cache=True, nogil=True)
def _room(ch, m, nB, mode, words_for, pool, meta):
    return _words_needed(ch, m, nB, mode, words_for) <= pool.shape[0] - meta[POOL_USED]


@nb.njit(cache=True, nogil=True)
def _advance(ch, m, e, P, nB, mode, cur, pool, words_for, meta):
    idx = ch[m, LO_IDX + e]
    if idx >= 0:
        if idx + 1 < nB:
            ch[m, LO_IDX + e] = idx + 1
            ch[m, LO + e] = P[idx + 1]
            return OK
        ch[m, LO_IDX + e] = -1
    v = ch[m, LO + e]
    if mode == TEST:
        ch[m, LO + e] = next_prime_tested(v)
        return OK
    if mode == LIST:
        return NEED_PRIMES
    slot = 2 * m + e
    if ch[m, LO_CUR + e] < 0:
        # first step past B: carve this end's sieve out of the pool
        ch[m, LO_CUR + e] = slot
        cur[slot, C_OFF] = meta[POOL_USED]
        cur[slot, C_NW] = words_for[m]
        meta[POOL_USED] += words_for[m]
        start = v + 1
        if start % 2 == 0:
            start += 1
        _cursor_fill(slot, start, cur, pool, P)
    ch[m, LO + e] = _cursor_next(slot, cur, pool, P)
    return OK


@nb.njit(cache=True, nogil=True)
def _slide(ch, m, P, nB, mode, cur, pool, words_for, meta):
    old = ch[m, LO]
    if m == 1:
        st = _advance(ch, m, 1, P, nB, mode, cur, pool, words_for, meta)
        ch[m, LO] = ch[m, HI]
        ch[m, SUM] = ch[m, HI]
        return st
    st = _advance(ch, m, 0, P, nB, mode, cur, pool, words_for, meta)
    if st != OK:
        return st
    st = _advance(ch, m, 1, P, nB, mode, cur, pool, words_for, meta)
    ch[m, SUM] += ch[m, HI] - old
    return st


@nb.njit(cache=True, nogil=True)
def _sift_down(heap, size, pos, ch):
    m = heap[pos]
    key = ch[m, SUM]
    while True:
        c = 2 * pos + 1
        if c >= size:
            break
        if c + 1 < size and ch[heap[c + 1], SUM] < ch[heap[c], SUM]:
            c += 1
        if ch[heap[c], SUM] >= key:
            break
        heap[pos] = heap[c]
        pos = c
    heap[pos] = m


@nb.njit(cache=True, nogil=True)
def _sift_up(heap, pos, ch):
    m = heap[pos]
    key = ch[m, SUM]
    while pos > 0:
        parent = (pos - 1) >> 1
        if ch[heap[parent], SUM] <= key:
            break
        heap[pos] = heap[parent]
        pos = parent
    heap[pos] = m


@nb.njit(cache=True, nogil=True)
def heap_block(n0, f, x2, ch, P, nB, mode, heap, meta, cur, pool, words_for):
    """Count f(n) for n in [n0, n0 + len(f)) with a binary min-heap of lengths."""
    n_end = n0 + f.shape[0]
    size = meta[SIZE]
    while size > 0:
        m = heap[0]
        s = ch[m, SUM]
        if s >= n_end:
            break
        if s < n0:
            meta[SIZE] = size
            return CORRUPT
        if not _room(ch, m, nB, mode, words_for, pool, meta):
            meta[SIZE] = size
            return NEED_SLOTS
        k = s - n0
        if f[k] == 255:
            meta[SIZE] = size
            return COUNTER_OVERFLOW
        f[k] += 1
        st = _slide(ch, m, P, nB, mode, cur, pool, words_for, meta)
        if st != OK:
            meta[SIZE] = size
            return st
        if ch[m, SUM] < x2:
            _sift_down(heap, size, 0, ch)
        else:
            size -= 1
            heap[0] = heap[size]
            if size > 0:
                _sift_down(heap, size, 0, ch)
    meta[SIZE] = size
    return OK


@nb.njit(cache=True, nogil=True)
def _reinsert(m, n, x2, ch, buckets, link, ovf, meta):
    s = ch[m, SUM]
    W = buckets.shape[0]
    if s >= x2:
        meta[SIZE] -= 1
    elif s - n < W:
        slot = s & (W - 1)
        link[m] = buckets[slot]
        buckets[slot] = m
    else:
        size = meta[OVF_SIZE]
        ovf[size] = m
        _sift_up(ovf, size, ch)
        meta[OVF_SIZE] = size + 1


@nb.njit(cache=True, nogil=True)
def bucket_block(n0, f, x2, ch, P, nB, mode, buckets, link, ovf, meta, cur, pool, words_for):
    """Same contract as heap_block, with a circular array of buckets keyed by sum.

    A chain goes into bucket ``sum mod W`` when its sum is less than W
    ahead of the sweep, otherwise into an overflow heap; so a bucket
    visited at n holds exactly the chains with sum n.
    """
    n_end = n0 + f.shape[0]
    W = buckets.shape[0]
    start = max(n0, meta[RESUME])
    for n in range(start, n_end):
        slot = n & (W - 1)
        while buckets[slot] != 0:
            m = buckets[slot]
            if ch[m, SUM] != n:
                return CORRUPT
            if not _room(ch, m, nB, mode, words_for, pool, meta):
                meta[RESUME] = n
                return NEED_SLOTS
            buckets[slot] = link[m]
            if f[n - n0] == 255:
                return COUNTER_OVERFLOW
            f[n - n0] += 1
            st = _slide(ch, m, P, nB, mode, cur, pool, words_for, meta)
            if st != OK:
                return st
            _reinsert(m, n, x2, ch, buckets, link, ovf, meta)
        while meta[OVF_SIZE] > 0 and ch[ovf[0], SUM] == n:
            m = ovf[0]
            if not _room(ch, m, nB, mode, words_for, pool, meta):
                meta[RESUME] = n
                return NEED_SLOTS
            size = meta[OVF_SIZE] - 1
            ovf[0] = ovf[size]
            meta[OVF_SIZE] = size
            if size > 0:
                _sift_down(ovf, size, 0, ch)
            if f[n - n0] == 255:
                return COUNTER_OVERFLOW
            f[n - n0] += 1
            st = _slide(ch, m, P, nB, mode, cur, pool, words_for, meta)
            if st != OK:
                return st
            _reinsert(m, n, x2, ch, buckets, link, ovf, meta)
        if meta[OVF_SIZE] > 0 and ch[ovf[0], SUM] < n:
            return CORRUPT
    meta[RESUME] = n_end
    return OK


# ---------------------------------------------------------------------------
# driver


@dataclass
class PqConfig:
    x1: int
    x2: int
    backend: str = "sieve"
    queue_impl: str = "heap"
    prime_bound: int | None = None

    def __post_init__(self):
        self.x1, self.x2 = int(self.x1), int(self.x2)
        if not 1 <= self.x1 < self.x2:
            raise ValueError("need 1 <= x1 < x2")
        if self.backend not in _MODE_CODE:
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.queue_impl not in ("heap", "map"):
            raise ValueError(f"unknown queue implementation {self.queue_impl!r}")
        if self.prime_bound is None:
            self.prime_bound = default_prime_bound(self.x2, self.backend)
        self.prime_bound = max(int(self.prime_bound), 128)


def default_prime_bound(x2: int, backend: str) -> int:
    if backend == "sieve":
        return round(x2 ** 0.6)
    if backend == "test":
        return math.isqrt(int(x2 * math.log(max(x2, 3))))
    return x2


def cursor_words(x2: int, M: int) -> np.ndarray:
    """Sieve words per chain end, indexed by length.

    A length-m chain lives near x2/m; its sieve covers about 8 (x2/m)^(1/3)
    odd numbers, at least 1024 and at most sqrt(x2).
    """
    m = np.arange(M + 1, dtype=np.float64)
    m[0] = 1
    want = 8 * np.cbrt(x2 / m)
    cap = max(1024.0, float(math.isqrt(x2)))
    bits = np.clip(want, 1024, cap)
    return ((bits.astype(np.int64) + 63) // 64).astype(np.int64)


def run_pq_interval(cfg: PqConfig, src: PrimeSource | None = None, sink=None, stats: dict | None = None) -> Histogram:
    """Histogram of f(n) for cfg.x1 <= n < cfg.x2.

    ``sink(n0, f)`` (optional) receives the f values in ascending blocks.
    When ``src`` is given its mode and bound override the config's.
    """
    x1, x2 = cfg.x1, cfg.x2
    if src is None:
        src = PrimeSource(cfg.backend, cfg.prime_bound)
    mode = _MODE_CODE[src.mode]
    B = src.bound
    if mode == LIST:
        P = src.ensure(x2 + 64 * int(math.log(x2 + 2)) + 1024)
        while P[-1] <= x2 or len(P) < 2:
            P = src.ensure(2 * src.limit)
        nB = len(P)
    else:
        P = src.ensure(max(B, math.isqrt(x2) + 2))
        nB = int(np.searchsorted(P, B))

    chains = setup_chain_array(x1, x2, src)
    ch = chains.table
    M = len(chains)
    live = np.flatnonzero(ch[1:, SUM] < x2) + 1
    idx_lo = np.searchsorted(P[:nB], ch[:, LO])
    ch[:, LO_IDX] = np.where((idx_lo < nB) & (P[np.minimum(idx_lo, len(P) - 1)] == ch[:, LO]), idx_lo, -1)
    idx_hi = np.searchsorted(P[:nB], ch[:, HI])
    ch[:, HI_IDX] = np.where((idx_hi < nB) & (P[np.minimum(idx_hi, len(P) - 1)] == ch[:, HI]), idx_hi, -1)
    ch[:, LO_CUR] = -1
    ch[:, HI_CUR] = -1

    meta = np.zeros(4, dtype=np.int64)
    meta[SIZE] = len(live)
    meta[RESUME] = x1
    words_for = cursor_words(x2, M)
    cur = np.zeros((2 * M + 2, 4), dtype=np.int64)
    short = min(M, 2 * x2 // max(B, 1) + 8) if mode == SIEVE else 0
    pool = np.zeros(2 * int(words_for[1:short + 1].sum()), dtype=np.uint64)

    if cfg.queue_impl == "heap":
        heap = np.zeros(M + 1, dtype=np.int64)
        heap[:len(live)] = live
        for pos in range(len(live) // 2 - 1, -1, -1):
            _sift_down(heap, len(live), pos, ch)
    else:
        span = int(2 * math.sqrt(x2 * math.log(x2 + 2))) + 64
        W = 1 << min(max(span, 1024).bit_length(), 22)
        buckets = np.zeros(W, dtype=np.int64)
        link = np.zeros(M + 1, dtype=np.int64)
        ovf = np.zeros(M + 1, dtype=np.int64)
        for m in live:
            _reinsert(int(m), x1, x2, ch, buckets, link, ovf, meta)

    hist = Histogram()
    peak = int(meta[SIZE])
    n0 = x1
    while n0 < x2:
        f = np.zeros(min(BLOCK, x2 - n0), dtype=np.uint8)
        while True:
            if cfg.queue_impl == "heap":
                st = heap_block(n0, f, x2, ch, P, nB, mode, heap, meta, cur, pool, words_for)
            else:
                st = bucket_block(n0, f, x2, ch, P, nB, mode, buckets, link, ovf, meta,
                                  cur, pool, words_for)
            if st == OK:
                break
            if st == NEED_SLOTS:
                pool = np.concatenate([pool, np.zeros(len(pool) + 2 * int(words_for.max()), dtype=np.uint64)])
                continue
            if st == COUNTER_OVERFLOW:
                raise OverflowError(f"some n in [{n0}, {n0 + len(f)}) has more than 255 representations")
            raise QueueCorruption(f"priority queue failure (status {st}) near n={n0}")
        peak = max(peak, int(meta[SIZE]))
        hist = hist + Histogram.from_f(f, n0)
        if sink is not None:
            sink(n0, f)
        n0 += len(f)
    if stats is not None:
        stats["M"] = M
        stats["peak_queue"] = max(stats.get("peak_queue", 0), peak)
        stats["cursor_words"] = max(stats.get("cursor_words", 0), int(meta[POOL_USED]))
        stats["memory_bytes"] = max(stats.get("memory_bytes", 0),
                                    ch.nbytes + cur.nbytes + 8 * int(meta[POOL_USED]) + P[:max(nB, 1)].nbytes)
    return hist


def run_pq(x: int, interval_len: int | None = None, backend: str = "sieve", workers: int = 1,
           queue_impl: str = "heap", prime_bound: int | None = None, sink=None,
           stats: dict | None = None, start: int = 1) -> Histogram:
    """Histogram over start <= n <= x, split into intervals of ``interval_len``."""
    x, start = int(x), int(start)
    if not 1 <= start <= x:
        raise ValueError("need 1 <= start <= x")
    L = int(interval_len) if interval_len else x - start + 1
    if L < 1:
        raise ValueError("interval length must be positive")
    bounds = [(a, min(a + L, x + 1)) for a in range(start, x + 1, L)]

    def work(ab):
        st = {}
        buf = [] if sink is not None else None
        cfg = PqConfig(ab[0], ab[1], backend, queue_impl, prime_bound)
        h = run_pq_interval(cfg, sink=(lambda n0, f: buf.append((n0, f))) if buf is not None else None, stats=st)
        return h, st, buf

    hist = Histogram()
    if workers == 1:
        results = map(work, bounds)
    else:
        pool = ThreadPoolExecutor(workers)
        results = pool.map(work, bounds)
    try:
        for h, st, buf in results:
            hist = hist + h
            if buf:
                for n0, f in buf:
                    sink(n0, f)
            if stats is not None:
                for key in ("M", "peak_queue", "cursor_words", "memory_bytes"):
                    stats[key] = max(stats.get(key, 0), st.get(key, 0))
    finally:
        if workers != 1:
            pool.shutdown()
    return hist
