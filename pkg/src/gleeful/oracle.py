"""Brute-force reference values.

``f_values_bruteforce`` enumerates every run of consecutive primes with
sum <= x using prefix sums; it needs O(x) memory, so it is capped.
``representations_of`` lists the runs summing to one n by checking a
single candidate chain per length, which scales to n near 10**14.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numba as nb
import numpy as np

from .chains import max_chain_length, minimal_chains
from .primes import PrimeSource, sieve_upto

DEFAULT_ORACLE_CAP = 10**7


class OracleCapError(ValueError):
    pass


def oracle_cap() -> int:
    value = os.environ.get("GLEEFUL_ORACLE_CAP")
    if value is None:
        return DEFAULT_ORACLE_CAP
    return int(float(value)) if "e" in value.lower() else int(value)


@dataclass(frozen=True, order=True)
class Representation:
    length: int
    pmin: int
    pmax: int
    sum: int


@nb.njit(cache=True, nogil=True)
def _count_runs(x, S, f):
    # S[i] = sum of the first i primes
    n = S.shape[0]
    for i in range(n - 1):
        if S[i + 1] - S[i] > x:
            break
        for j in range(i + 1, n):
            s = S[j] - S[i]
            if s > x:
                break
            f[s] += 1


def f_values_bruteforce(x: int) -> np.ndarray:
    """f(n) for 0 <= n <= x as an int32 array indexed by n (entry 0 is 0)."""
    x = int(x)
    cap = oracle_cap()
    if x > cap:
        raise OracleCapError(f"x={x} exceeds the oracle cap {cap} (set GLEEFUL_ORACLE_CAP)")
    f = np.zeros(max(x, 0) + 1, dtype=np.int32)
    if x < 2:
        return f
    P = sieve_upto(x).primes
    S = np.zeros(len(P) + 1, dtype=np.int64)
    np.cumsum(P, out=S[1:])
    _count_runs(x, S, f)
    return f


def representations_of(n: int, src: PrimeSource | None = None) -> list[Representation]:
    """All runs of consecutive primes summing to n, longest first.

    For each length m there is exactly one candidate: the length-m chain
    with minimal sum >= n.  ``src`` is accepted for interface symmetry;
    the search sieves its own windows.
    """
    n = int(n)
    if n < 2:
        return []
    M = max_chain_length(n)
    lo, hi, sm = minimal_chains(n, M)
    hits = np.flatnonzero(sm == n)
    return [Representation(int(m), int(lo[m]), int(hi[m]), n) for m in hits[::-1]]
