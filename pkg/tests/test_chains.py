import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gleeful.chains import (Chain, build_chain_of_length, build_initial_chain, drop_largest,
                            max_chain_length, minimal_chains, slide, unslide)
from gleeful.primes import NoPreviousPrime, PrimeSource, sieve_upto

PRIMES = sieve_upto(10**7).primes


PREFIX = np.concatenate([[0], np.cumsum(PRIMES)])


def brute_minimal(target, m):
    sums = PREFIX[m:] - PREFIX[:-m]
    i = int(np.searchsorted(sums, target))
    return int(PRIMES[i]), int(PRIMES[i + m - 1]), int(sums[i])


def test_chain_validation():
    with pytest.raises(ValueError):
        Chain(5, 5, 0, 0)
    with pytest.raises(ValueError):
        Chain(5, 7, 1, 12)
    assert Chain.of([2, 3, 5, 7]) == Chain(2, 7, 4, 17)


def test_slide_and_unslide():
    c = Chain.of([2, 3, 5, 7])
    assert slide(c) == Chain.of([3, 5, 7, 11])
    assert unslide(slide(c)) == c
    assert slide(Chain.of([7])) == Chain.of([11])
    with pytest.raises(NoPreviousPrime):
        unslide(c)


def test_drop_largest():
    c = Chain.of(PRIMES[:9])
    assert c.sum == 100
    d = drop_largest(c)
    assert d.sum == 77 and d.length == 8 and d.pmax == 19
    with pytest.raises(ValueError):
        drop_largest(Chain.of([11]))


def test_initial_chain():
    assert build_initial_chain(1) is None
    assert build_initial_chain(17) == Chain.of([2, 3, 5, 7])
    assert build_initial_chain(27) == Chain.of([2, 3, 5, 7])
    assert build_initial_chain(28) == Chain.of([2, 3, 5, 7, 11])


def test_chain_of_length_examples():
    assert build_chain_of_length(4, 2357).primes() == [587, 593, 599, 601]
    assert build_chain_of_length(3, 2357) == Chain.of([773, 787, 797])
    assert build_chain_of_length(1, 10) == Chain.of([11])
    assert build_chain_of_length(3, 10) == Chain.of([2, 3, 5])


@pytest.mark.parametrize("x,M", [(1, 0), (2, 1), (4, 1), (5, 2), (17, 4), (27, 4), (28, 5), (10**6, 546)])
def test_max_chain_length(x, M):
    assert max_chain_length(x) == M


def test_chain_primes_with_sources():
    c = Chain(987693817667, 987693819859, 86, 84941668414584)
    for mode in ("sieve", "test"):
        run = c.primes(PrimeSource(mode))
        assert len(run) == 86 and sum(run) == c.sum


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=2, max_value=3 * 10**6), st.data())
def test_minimal_chains_brute_force(target, data):
    M = max_chain_length(target)
    lo, hi, sm = minimal_chains(target, M)
    picks = set(range(1, min(M, 12) + 1)) | {M}
    picks |= set(data.draw(st.lists(st.integers(1, M), max_size=20)))
    for m in sorted(picks):
        assert (lo[m], hi[m], sm[m]) == brute_minimal(target, m)


def test_minimal_chains_streaming_branch():
    # above the list-sweep limit the long lengths stream through a sieve
    target = 98765432
    M = max_chain_length(target)
    lo, hi, sm = minimal_chains(target, M)
    src = PrimeSource("sieve")
    for m in (1, 2, 7, 60, 500, M // 2, M):
        c = Chain(int(lo[m]), int(hi[m]), m, int(sm[m]))
        assert c.sum >= target and sum(c.primes(src)) == c.sum
        if c.pmin > 2:
            assert unslide(c, src).sum < target
