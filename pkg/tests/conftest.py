import numpy as np
import pytest

from mesozeta import primes


@pytest.fixture(scope="session")
def table_1e4():
    return primes.sieve_primes(10**4)


@pytest.fixture(scope="session")
def table_1e5():
    return primes.sieve_primes(10**5)


@pytest.fixture(scope="session")
def table_1e6():
    return primes.sieve_primes(10**6)


def trial_division_primes(limit: int) -> np.ndarray:
    """Independent primality oracle: plain trial division, no sieving."""
    if limit < 2:
        return np.empty(0, np.int64)
    small = [d for d in range(2, int(limit**0.5) + 1)
             if all(d % q for q in range(2, int(d**0.5) + 1))]
    n = np.arange(2, limit + 1, dtype=np.int64)
    mask = np.ones(n.size, bool)
    for d in small:
        mask &= (n % d != 0) | (n == d)
    return n[mask]
