import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mesozeta import dirichlet, primes
from mesozeta.oscsum import phases_mod_2pi
from mesozeta.resources import TruncationError

T2 = primes.sieve_primes(2)
T3 = primes.sieve_primes(3)


def test_empty_scale_is_zero(table_1e4):
    # exp(e^k) < 2 leaves no primes
    assert dirichlet.eval_S(table_1e4, -1.0, 5.0, 0.1) == 0.0
    assert dirichlet.eval_S_tilde(table_1e4, -1.0, 5.0, 0.1) == 0j


def test_hand_value_single_prime():
    val = dirichlet.eval_S(T2, T2.max_scale, 0.0, 0.0)
    assert val == pytest.approx(2 ** -0.5 + 0.25, abs=1e-12)
    assert abs(val - 0.957107) < 1e-6


def test_hand_value_two_primes():
    val = dirichlet.eval_S(T3, T3.max_scale, 0.0, 0.0)
    assert val == pytest.approx(2 ** -0.5 + 0.25 + 3 ** -0.5 + 1 / 6, abs=1e-12)
    assert abs(val - 1.701124) < 1e-6


def test_tilde_real_part_is_eval_S_bitwise(table_1e4):
    for tau, h in [(0.0, 0.0), (1234.5, 0.01), (98765.4, -0.2)]:
        k = table_1e4.max_scale
        assert dirichlet.eval_S_tilde(table_1e4, k, tau, h).real \
            == dirichlet.eval_S(table_1e4, k, tau, h)


def test_tilde_real_phases_single_prime():
    assert dirichlet.eval_S_tilde(T2, T2.max_scale, 0.0, 0.0) \
        == pytest.approx(0.957107 + 0j, abs=1e-6)


def test_rejects_non_finite_args(table_1e4):
    with pytest.raises(ValueError):
        dirichlet.eval_S(table_1e4, 1.0, math.nan, 0.0)
    with pytest.raises(ValueError):
        dirichlet.eval_S(table_1e4, 1.0, 0.0, math.inf)


def test_truncation_flagging(table_1e4):
    k_over = table_1e4.max_scale + 0.5
    with pytest.raises(TruncationError):
        dirichlet.eval_S(table_1e4, k_over, 0.0, 0.0)
    # accepted truncation equals the full-table value
    assert dirichlet.eval_S(table_1e4, k_over, 7.0, 0.0, allow_truncation=True) \
        == dirichlet.eval_S(table_1e4, table_1e4.max_scale, 7.0, 0.0)


def test_shifted_zero_at_zero(table_1e4):
    assert dirichlet.eval_shifted(table_1e4, 0.0, 1.0, 3.0, 0.0) == 0.0


def test_shifted_single_prime_increment(table_1e4):
    # t_theta = 0 (cut at log p <= 1 keeps only p=2); k reaching log 3 only
    t_theta = 0.0
    k = math.log(1.2)  # e^k = 1.2 in (log 3, log 5)
    val = dirichlet.eval_shifted(table_1e4, k, t_theta, 0.0, 0.0)
    assert val == pytest.approx(3 ** -0.5 + 1 / 6, abs=1e-12)
    assert abs(val - 0.744017) < 1e-6


def test_shifted_additivity(table_1e4):
    tau, h, tth = 321.5, 0.02, 0.3
    k1, k2 = 0.7, 1.4
    lhs = dirichlet.eval_shifted(table_1e4, k2, tth, tau, h) \
        - dirichlet.eval_shifted(table_1e4, k1, tth, tau, h)
    sl = primes.primes_in_scale(table_1e4, tth + k1, tth + k2)
    from mesozeta.oscsum import unit_phases_split
    u = unit_phases_split(tau, h, sl.logp)
    p = sl.primes.astype(float)
    direct = float(np.sum(((p ** -0.5) * u + (0.5 / p) * u * u).real))
    assert lhs == pytest.approx(direct, abs=1e-12)


def test_shifted_rejects_negative_k(table_1e4):
    with pytest.raises(ValueError):
        dirichlet.eval_shifted(table_1e4, -0.1, 1.0, 0.0, 0.0)


# -- grids ---------------------------------------------------------------------

def test_grid_geometry():
    g = dirichlet.HGrid(center=0.5, half_width=0.1, spacing=0.03)
    assert g.count == 2 * 3 + 1
    pts = g.points()
    assert pts.size == g.count
    assert pts[g.n_half] == pytest.approx(0.5, abs=0)
    np.testing.assert_allclose(pts + pts[::-1], 1.0, atol=1e-15)


def test_grid_rejects_bad_spacing():
    with pytest.raises(ValueError):
        dirichlet.HGrid(center=0.0, half_width=1.0, spacing=0.0)


def test_eval_grid_single_point(table_1e4):
    g = dirichlet.HGrid(center=0.013, half_width=0.0, spacing=1.0)
    assert g.count == 1
    v = dirichlet.eval_grid(table_1e4, table_1e4.max_scale, 55.5, g)
    s = dirichlet.eval_S(table_1e4, table_1e4.max_scale, 55.5, 0.013)
    assert abs(v[0] - s) <= 1e-10 * (1 + abs(s))


def test_eval_grid_hand_values_three_points():
    g = dirichlet.HGrid(center=0.0, half_width=0.2, spacing=0.2)
    v = dirichlet.eval_grid(T3, T3.max_scale, 0.0, g)
    for i, h in enumerate(g.points()):
        expect = (2 ** -0.5 * math.cos(h * math.log(2))
                  + 0.25 * math.cos(2 * h * math.log(2))
                  + 3 ** -0.5 * math.cos(h * math.log(3))
                  + (1 / 6) * math.cos(2 * h * math.log(3)))
        assert v[i] == pytest.approx(expect, abs=1e-12)


def test_eval_grid_symmetric_at_tau_zero(table_1e4):
    g = dirichlet.HGrid(center=0.0, half_width=0.3, spacing=0.05)
    v = dirichlet.eval_grid(table_1e4, table_1e4.max_scale, 0.0, g)
    np.testing.assert_allclose(v, v[::-1], atol=1e-11)


@pytest.mark.parametrize("tau", [0.0, 777.25, 2.5e6])
def test_eval_grid_matches_scalar(table_1e4, tau):
    g = dirichlet.HGrid(center=0.0, half_width=0.05, spacing=0.002)
    k = table_1e4.max_scale
    v = dirichlet.eval_grid(table_1e4, k, tau, g)
    pts = g.points()
    for i in [0, 7, g.count // 2, g.count - 1]:
        s = dirichlet.eval_S(table_1e4, k, tau, float(pts[i]))
        assert abs(v[i] - s) <= 1e-10 * (1 + abs(s))


def test_walk_trajectory_prefix_consistency(table_1e4):
    times = np.array([0.5, 1.0, 1.7, table_1e4.max_scale])
    tau, h = 91.25, 0.015
    traj = dirichlet.walk_trajectory(table_1e4, times, tau, h)
    assert traj.kind == "S"
    for t_i, v_i in zip(times, traj.values):
        assert v_i == dirichlet.eval_S(table_1e4, float(t_i), tau, h)
    # increments recoverable
    np.testing.assert_allclose(np.diff(traj.values), traj.increments())


def test_walk_trajectory_shifted(table_1e4):
    times = np.array([0.0, 0.5, 1.0])
    traj = dirichlet.walk_trajectory(table_1e4, times, 3.0, 0.0,
                                     kind="shifted", t_theta=0.4)
    assert traj.values[0] == 0.0
    expect = dirichlet.eval_shifted(table_1e4, 1.0, 0.4, 3.0, 0.0)
    assert traj.values[2] == pytest.approx(expect, abs=1e-12)


def test_trajectory_validation():
    with pytest.raises(ValueError):
        dirichlet.WalkTrajectory(times=np.array([1.0, 1.0]),
                                 values=np.zeros(2), kind="S")
    with pytest.raises(ValueError):
        dirichlet.WalkTrajectory(times=np.array([0.0]),
                                 values=np.array([1.0]), kind="shifted")
    with pytest.raises(ValueError):
        dirichlet.WalkTrajectory(times=np.array([0.0]),
                                 values=np.array([0.0]), kind="bogus")


def test_phases_mod_2pi_against_mpmath():
    import mpmath as mp
    mp.mp.dps = 40
    rng = np.random.default_rng(4)
    freqs = rng.uniform(0.5, 20.0, 50)
    for x in [3.7e5, 1.0e9, 7.3e12]:
        got = phases_mod_2pi(x, freqs)
        for f, g in zip(freqs, got):
            exact = mp.fmod(mp.mpf(x) * mp.mpf(float(f)), 2 * mp.pi)
            if exact > mp.pi:
                exact -= 2 * mp.pi
            assert abs(float(exact) - g) < 5e-15 or \
                abs(abs(float(exact) - g) - 2 * math.pi) < 5e-15


@given(st.floats(min_value=-0.4, max_value=0.4),
       st.floats(min_value=0.0, max_value=3.0))
@settings(max_examples=25, deadline=None)
def test_eval_S_matches_bruteforce_small(h, k):
    # brute force over an explicit list of primes
    table = T3 if k < 1.2 else primes.sieve_primes(50)
    cut = table.cut_index(k)
    acc = 0.0
    for p in table.primes[:cut].tolist():
        acc += (p ** -0.5) * math.cos(h * math.log(p)) \
            + 0.5 / p * math.cos(2 * h * math.log(p))
    got = dirichlet.eval_S(table, k, 0.0, h, allow_truncation=True)
    assert got == pytest.approx(acc, abs=1e-10)


# -- statistical invariants ------------------------------------------------------

@pytest.mark.slow
def test_variance_over_tau_matches_prediction(table_1e4):
    # Var over tau ~ U[T,2T] of S_k(0) should match (1/2) sum 1/p + (1/8) sum 1/p^2
    T = 1e8
    n = 4000
    k = table_1e4.max_scale
    rng = np.random.default_rng(11)
    taus = T * (1 + rng.uniform(size=n))
    vals = np.array([dirichlet.eval_S(table_1e4, k, t, 0.0) for t in taus])
    p = table_1e4.primes.astype(float)
    target = float(np.sum(0.5 / p + 0.125 / p ** 2))
    se = target * math.sqrt(2.0 / (n - 1))
    assert abs(vals.var() - target) < 3 * se


@pytest.mark.slow
def test_disjoint_ranges_uncorrelated(table_1e4):
    T = 1e8
    n = 3000
    rng = np.random.default_rng(12)
    taus = T * (1 + rng.uniform(size=n))
    lo = np.array([dirichlet.eval_S(table_1e4, 1.0, t, 0.0) for t in taus])
    hi = np.array([dirichlet.eval_S(table_1e4, 2.0, t, 0.0) for t in taus]) - lo
    r = np.corrcoef(lo, hi)[0, 1]
    assert abs(r) < 3.0 / math.sqrt(n)


@pytest.mark.slow
def test_nearby_offsets_highly_correlated(table_1e4):
    # |h - h'| <= e^{-k} keeps correlation above 0.9
    T = 1e8
    n = 2500
    k = 2.0
    dh = 0.5 * math.exp(-k)
    rng = np.random.default_rng(13)
    taus = T * (1 + rng.uniform(size=n))
    a = np.array([dirichlet.eval_S(table_1e4, k, t, 0.0) for t in taus])
    b = np.array([dirichlet.eval_S(table_1e4, k, t, dh) for t in taus])
    assert np.corrcoef(a, b)[0, 1] > 0.9
