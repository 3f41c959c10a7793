import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mesozeta import primes
from mesozeta.resources import MemoryBudgetError

from conftest import trial_division_primes


def test_first_primes():
    assert primes.sieve_primes(10).primes.tolist() == [2, 3, 5, 7]


def test_empty_below_two():
    assert len(primes.sieve_primes(1)) == 0
    assert len(primes.sieve_primes(0)) == 0


def test_count_at_1e6_matches_trial_division(table_1e6):
    oracle = trial_division_primes(10**6)
    assert oracle.size == 78498
    assert len(table_1e6) == oracle.size
    assert np.array_equal(table_1e6.primes, oracle)


def test_segment_size_does_not_change_output():
    a = primes.sieve_primes(10**5)
    b = primes.sieve_primes(10**5, segment_size=1 << 12)
    assert np.array_equal(a.primes, b.primes)


@given(st.integers(min_value=2, max_value=30000))
@settings(max_examples=60, deadline=None)
def test_membership_agrees_with_trial_division(n):
    table = _spot_table()
    is_p = all(n % d for d in range(2, int(n**0.5) + 1))
    assert (n in _spot_set(table)) == is_p


_SPOT = None
_SPOT_SET = None


def _spot_table():
    global _SPOT
    if _SPOT is None:
        _SPOT = primes.sieve_primes(30000)
    return _SPOT


def _spot_set(table):
    global _SPOT_SET
    if _SPOT_SET is None:
        _SPOT_SET = set(table.primes.tolist())
    return _SPOT_SET


def test_logp_accuracy(table_1e4):
    # stored logs stay within ~1 ulp of the true values
    import mpmath as mp
    for p in [2, 3, 97, 9973]:
        i = int(np.searchsorted(table_1e4.primes, p))
        assert table_1e4.primes[i] == p
        err = abs(mp.mpf(float(table_1e4.logp[i])) - mp.log(p))
        assert err < 1.2 * np.spacing(table_1e4.logp[i])


def test_bucket_invariants(table_1e6):
    t = table_1e6
    # contiguous, disjoint, covering
    assert t.bucket_starts[0] == 0
    assert t.bucket_starts[-1] == len(t)
    assert np.all(np.diff(t.bucket_starts) >= 0)
    for j in range(t.n_buckets):
        a, b = t.bucket(j)
        if a == b:
            continue
        lp = t.logp[a:b]
        if j == 0:
            assert lp.max() <= 1.0
        else:
            assert lp.min() > math.exp(j - 1.0)
            assert lp.max() <= math.exp(float(j))


def test_bucket_matches_primes_in_scale(table_1e6):
    t = table_1e6
    for j in range(1, t.n_buckets):
        a, b = t.bucket(j)
        sl = primes.primes_in_scale(t, float(j - 1), float(j))
        assert np.array_equal(sl.primes, t.primes[a:b])


def test_primes_in_scale_examples(table_1e6):
    sl = primes.primes_in_scale(table_1e6, 0.0, 1.0)
    assert sl.primes.tolist() == [3, 5, 7, 11, 13]
    assert not sl.truncated

    small = primes.sieve_primes(100)
    sl = primes.primes_in_scale(small, 5.0, 6.0)
    assert sl.primes.size == 0
    assert sl.truncated

    sl = primes.primes_in_scale(table_1e6, -math.inf, math.log(math.log(4)))
    assert sl.primes.tolist() == [2, 3]


def test_primes_in_scale_rejects_bad_range(table_1e4):
    with pytest.raises(ValueError):
        primes.primes_in_scale(table_1e4, 1.0, 1.0)


def test_mertens_hand_value():
    t = primes.sieve_primes(10)
    expect = 1 / 2 + 1 / 3 + 1 / 5 + 1 / 7
    assert primes.mertens_sum(t, t.max_scale) == pytest.approx(expect, abs=1e-15)
    assert abs(expect - 1.176190) < 1e-6


def test_mertens_empty():
    assert primes.mertens_sum(primes.sieve_primes(1), 3.0) == 0.0


def test_mertens_vs_constant(table_1e6):
    mertens_const = 0.2614972  # independent value of the Mertens constant
    target = math.log(math.log(10**6)) + mertens_const
    assert abs(primes.mertens_sum(table_1e6, table_1e6.max_scale) - target) < 5e-3


def test_mertens_monotone(table_1e5):
    ks = np.linspace(-1.0, table_1e5.max_scale, 40)
    vals = [primes.mertens_sum(table_1e5, k) for k in ks]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_cache_roundtrip(tmp_path, table_1e4):
    path = tmp_path / "primes.mzpt"
    table_1e4.save_cache(path)
    raw = path.read_bytes()
    assert raw[:4] == b"MZPT"
    loaded = primes.PrimeTable.load_cache(path)
    assert loaded.limit == table_1e4.limit
    assert np.array_equal(loaded.primes, table_1e4.primes)
    assert np.array_equal(loaded.logp, table_1e4.logp)  # recomputed identically


def test_cache_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.mzpt"
    path.write_bytes(b"NOPE" + b"\0" * 20)
    with pytest.raises(ValueError, match="magic"):
        primes.PrimeTable.load_cache(path)


def test_memory_budget_enforced(monkeypatch):
    monkeypatch.setenv("MESOZETA_MEM_BUDGET_MB", "1")
    with pytest.raises(MemoryBudgetError, match="1 MB"):
        primes.sieve_primes(10**9)


def test_negative_limit_rejected():
    with pytest.raises(ValueError):
        primes.sieve_primes(-1)
