"""Histogram algebra, record tracking, density series and the Poisson comparison.

Both counting algorithms report their results as ascending blocks
``(n0, f)`` where ``f[i] = f(n0 + i)``.  A :class:`BlockSink` turns that
stream into a histogram, a record table and density checkpoints.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

LOG2 = math.log(2)


def _coalesce(ranges):
    out = []
    for lo, hi in sorted(ranges):
        if out and out[-1][1] == lo:
            out[-1] = (out[-1][0], hi)
        else:
            out.append((lo, hi))
    return tuple(out)


@dataclass(frozen=True)
class Histogram:
    """h(k) = number of n in the covered ranges with f(n) = k.

    ``ranges`` are half-open [lo, hi) intervals of n; zero tallies are not stored.
    """

    counts: dict = field(default_factory=dict)
    ranges: tuple = ()

    def __post_init__(self):
        clean = {int(k): int(v) for k, v in self.counts.items() if v}
        if any(v < 0 for v in clean.values()):
            raise ValueError("negative tally")
        object.__setattr__(self, "counts", dict(sorted(clean.items())))
        object.__setattr__(self, "ranges", _coalesce(tuple(map(tuple, self.ranges))))

    @classmethod
    def from_f(cls, f, n0: int) -> "Histogram":
        f = np.asarray(f)
        tally = np.bincount(f) if len(f) else np.zeros(0, dtype=np.int64)
        return cls({k: int(v) for k, v in enumerate(tally) if v}, ((n0, n0 + len(f)),) if len(f) else ())

    @classmethod
    def from_list(cls, values, lo: int, hi: int) -> "Histogram":
        return cls(dict(enumerate(values)), ((lo, hi),))

    def __getitem__(self, k: int) -> int:
        return self.counts.get(k, 0)

    def __add__(self, other: "Histogram") -> "Histogram":
        return merge(self, other)

    @property
    def width(self) -> int:
        return sum(hi - lo for lo, hi in self.ranges)

    def total(self) -> int:
        return sum(self.counts.values())

    def weighted_total(self) -> int:
        """Sum of k * h(k): the number of representations counted."""
        return sum(k * v for k, v in self.counts.items())

    def mean(self) -> float:
        return self.weighted_total() / self.total() if self.counts else 0.0

    def kmax(self) -> int:
        return max(self.counts, default=0)

    def as_list(self, kmax: int | None = None) -> list[int]:
        kmax = self.kmax() if kmax is None else kmax
        return [self[k] for k in range(kmax + 1)]


def merge(a: Histogram, b: Histogram) -> Histogram:
    for lo1, hi1 in a.ranges:
        for lo2, hi2 in b.ranges:
            if lo1 < hi2 and lo2 < hi1:
                raise ValueError(f"overlapping ranges [{lo1},{hi1}) and [{lo2},{hi2})")
    counts = dict(a.counts)
    for k, v in b.counts.items():
        counts[k] = counts.get(k, 0) + v
    return Histogram(counts, a.ranges + b.ranges)


# ---------------------------------------------------------------------------
# records


class OrderError(ValueError):
    pass


@dataclass
class RecordTable:
    """Smallest n seen with f(n) = k, for every k seen."""

    entries: dict = field(default_factory=dict)
    reps: dict = field(default_factory=dict)
    last_n: int = 0

    def __getitem__(self, k):
        return self.entries[k]

    def __contains__(self, k):
        return k in self.entries

    def as_dict(self) -> dict:
        return dict(sorted(self.entries.items()))


def update_records(table: RecordTable, n: int, f: int) -> RecordTable:
    if n <= table.last_n:
        raise OrderError(f"n={n} arrived after n={table.last_n}")
    table.last_n = n
    table.entries.setdefault(int(f), int(n))
    return table


def update_records_block(table: RecordTable, n0: int, f) -> RecordTable:
    """Vectorised update_records for f(n0), f(n0+1), ..."""
    if len(f) == 0:
        return table
    if n0 <= table.last_n:
        raise OrderError(f"block at n={n0} arrived after n={table.last_n}")
    ks, first = np.unique(np.asarray(f), return_index=True)
    for k, i in zip(ks.tolist(), first.tolist()):
        table.entries.setdefault(k, n0 + i)
    table.last_n = n0 + len(f) - 1
    return table


def merge_records(earlier: RecordTable, later: RecordTable) -> RecordTable:
    """Combine tables from two consecutive ranges; ``earlier`` covers the smaller n."""
    out = RecordTable(dict(earlier.entries), dict(earlier.reps), max(earlier.last_n, later.last_n))
    for k, n in later.entries.items():
        if k not in out.entries:
            out.entries[k] = n
            if k in later.reps:
                out.reps[k] = later.reps[k]
    return out


# ---------------------------------------------------------------------------
# density


def average_density_series(blocks: Iterable, checkpoints) -> list[tuple[int, float]]:
    """Running mean of f(n) over 1..x at each checkpoint x.

    ``blocks`` yields (n0, f) pairs covering 1, 2, 3, ... contiguously.
    """
    checkpoints = [int(c) for c in checkpoints]
    if checkpoints != sorted(checkpoints):
        raise ValueError("checkpoints must be ascending")
    out = []
    total = 0
    expect = 1
    ci = 0
    for n0, f in blocks:
        if n0 != expect:
            raise OrderError(f"expected a block at n={expect}, got n={n0}")
        f = np.asarray(f, dtype=np.int64)
        end = n0 + len(f)  # exclusive
        csum = None
        while ci < len(checkpoints) and checkpoints[ci] < end:
            if csum is None:
                csum = np.cumsum(f)
            x = checkpoints[ci]
            out.append((x, (total + int(csum[x - n0])) / x))
            ci += 1
        total += int(f.sum())
        expect = end
    return out


def density_from_histogram(h: Histogram) -> float:
    return h.weighted_total() / h.total()


# ---------------------------------------------------------------------------
# Poisson model


def poisson_expected(x: int, kmax: int, lam: float = LOG2) -> list[float]:
    """Expected counts x * e^-lam * lam^k / k! for k = 0..kmax."""
    if kmax < 0:
        raise ValueError("kmax must be >= 0")
    out = []
    term = x * math.exp(-lam)
    for k in range(kmax + 1):
        if k:
            term *= lam / k
        out.append(term)
    return out


def poisson_table(h: Histogram, kmax: int | None = None, x: int | None = None):
    """Rows of (k, observed, expected, observed/expected)."""
    kmax = h.kmax() if kmax is None else kmax
    x = h.total() if x is None else x
    expected = poisson_expected(x, kmax)
    return [(k, h[k], e, h[k] / e) for k, e in enumerate(expected)]


# ---------------------------------------------------------------------------
# streaming consumer


class BlockSink:
    """Consumes ascending (n0, f) blocks: histogram, records, density checkpoints."""

    def __init__(self, checkpoints=(), records: bool = True):
        self.histogram = Histogram()
        self.records = RecordTable() if records else None
        self.checkpoints = sorted(int(c) for c in checkpoints)
        self.density: list[tuple[int, float]] = []
        self._total = 0
        self._ci = 0

    def __call__(self, n0: int, f) -> None:
        f = np.asarray(f)
        if len(f) == 0:
            return
        self.histogram = merge(self.histogram, Histogram.from_f(f, n0))
        if self.records is not None:
            update_records_block(self.records, n0, f)
        end = n0 + len(f)
        csum = None
        while self._ci < len(self.checkpoints) and self.checkpoints[self._ci] < end:
            x = self.checkpoints[self._ci]
            if x >= n0:
                if csum is None:
                    csum = np.cumsum(f, dtype=np.int64)
                self.density.append((x, (self._total + int(csum[x - n0])) / x))
            self._ci += 1
        self._total += int(f.sum(dtype=np.int64))


# ---------------------------------------------------------------------------
# output formats


def histogram_csv(h: Histogram, kmax: int | None = None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "count"])
    for k, v in enumerate(h.as_list(kmax)):
        w.writerow([k, v])
    return buf.getvalue()


def density_csv(series) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "mean"])
    for x, mean in series:
        w.writerow([x, f"{mean:.9f}"])
    return buf.getvalue()


def records_csv(table: RecordTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "n"])
    for k, n in sorted(table.entries.items()):
        w.writerow([k, n])
    return buf.getvalue()


def representations_csv(reps, header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(["length", "pmin", "pmax"])
    for r in sorted(reps, key=lambda r: -r.length):
        w.writerow([r.length, r.pmin, r.pmax])
    return buf.getvalue()


def poisson_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "observed", "expected", "ratio"])
    for k, obs, exp, ratio in rows:
        w.writerow([k, obs, f"{exp:.3f}", f"{ratio:.6f}"])
    return buf.getvalue()


def histogram_json(h: Histogram) -> str:
    return json.dumps({"ranges": [list(r) for r in h.ranges],
                       "counts": {str(k): v for k, v in h.counts.items()}}, indent=2) + "\n"


def records_json(table: RecordTable) -> str:
    data = {}
    for k, n in sorted(table.entries.items()):
        entry = {"n": n}
        if k in table.reps:
            entry["representations"] = [[r.length, r.pmin, r.pmax] for r in table.reps[k]]
        data[str(k)] = entry
    return json.dumps(data, indent=2) + "\n"
