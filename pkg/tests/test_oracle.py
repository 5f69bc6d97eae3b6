import numpy as np
import pytest

from gleeful.oracle import OracleCapError, Representation, f_values_bruteforce, representations_of
from gleeful.primes import PrimeSource


def test_small_values():
    f = f_values_bruteforce(41)
    assert f[0] == 0 and f[1] == 0
    assert (f[5], f[6], f[10], f[17], f[41]) == (2, 0, 1, 2, 3)


def test_tiny_bounds():
    assert f_values_bruteforce(1).tolist() == [0, 0]
    assert f_values_bruteforce(2).tolist() == [0, 0, 1]


def test_cap(monkeypatch):
    monkeypatch.setenv("GLEEFUL_ORACLE_CAP", "1e3")
    with pytest.raises(OracleCapError):
        f_values_bruteforce(1001)
    assert len(f_values_bruteforce(1000)) == 1001


def test_representations_examples():
    assert representations_of(6) == []
    assert representations_of(1) == []
    assert representations_of(17) == [Representation(4, 2, 7, 17), Representation(1, 17, 17, 17)]
    assert [(r.length, r.pmin, r.pmax) for r in representations_of(41)] == [(6, 2, 13), (3, 11, 17), (1, 41, 41)]


def test_representations_2357():
    # 461 + ... + 487 needs five primes, and 2357 is itself prime
    got = [(r.length, r.pmin, r.pmax) for r in representations_of(2357)]
    assert got == [(5, 461, 487), (3, 773, 797), (1, 2357, 2357)]
    assert sum([461, 463, 467, 479, 487]) == 2357


def test_representations_agree_with_bruteforce(f_small):
    counts = np.array([len(representations_of(n)) for n in range(len(f_small))])
    assert np.array_equal(counts, f_small)


def test_representations_resum():
    src = PrimeSource("test")
    for n in (311, 1151, 34421, 218918):
        reps = representations_of(n)
        lengths = [r.length for r in reps]
        assert lengths == sorted(lengths, reverse=True)
        for r in reps:
            run = [r.pmin]
            while run[-1] < r.pmax:
                run.append(src.next_prime(run[-1]))
            assert len(run) == r.length and sum(run) == n
