"""Critical-line zeta evaluation: Riemann-Siegel for t >= 50 with an
Euler-Maclaurin cross-check path, plus grid maxima over mesoscopic windows.

Z(t) = 2 sum_{n <= N} cos(theta(t) - t log n)/sqrt(n) + remainder, with
N = floor(sqrt(t/2pi)) and the remainder expanded in correction terms
C_0..C_3 built from derivatives of Psi(p) = cos(2pi(p^2-p-1/16))/cos(2pi p).
The derivatives come from a Cauchy integral on a radius-1/4 circle (Psi is
entire), tabulated once as Chebyshev interpolants over p in [0,1].

|zeta(1/2+it)| = |Z(t)| exactly; zeta(1/2+it) = e^{-i theta(t)} Z(t).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.chebyshev import Chebyshev
from scipy.special import bernoulli

from .dirichlet import HGrid
from .oscsum import OscillatoryGridKernel, unit_phases, unit_phases_split
from .resources import check_budget

RS_MIN_T = 50.0
_TWO_PI = 2.0 * math.pi

# error-estimate constants per number of correction terms; 1..3 follow the
# classical rigorous bounds, 4 is an empirical envelope (see tests)
_RS_ERR_COEF = {0: 1.0, 1: 0.127, 2: 0.053, 3: 0.011, 4: 2.0}
_RS_ERR_FLOOR = 1e-11


@dataclass
class ZetaSample:
    """One critical-line evaluation: Z(t), theta(t), |zeta|, error estimate."""

    t: float
    z_value: float
    theta: float
    error_estimate: float

    @property
    def abs_zeta(self) -> float:
        return abs(self.z_value)

    @property
    def zeta(self) -> complex:
        return complex(math.cos(self.theta), -math.sin(self.theta)) * self.z_value


# -- Euler-Maclaurin ----------------------------------------------------------

_BERNOULLI = bernoulli(64)


def zeta_euler_maclaurin(sigma: float, t: float, terms: int) -> tuple[complex, float]:
    """zeta(sigma + it) by Euler-Maclaurin with `terms` main-sum terms.

    Returns (value, rigorous truncation bound).  The Bernoulli correction
    depth adapts until the remainder bound stops shrinking; if the bound
    is still large the caller sees it -- accuracy loss is never silent.
    Intended for t <= ~1e6; cost is O(terms).
    """
    if t < 0:
        raise ValueError("t must be >= 0 (use conjugate symmetry)")
    if terms < 1:
        raise ValueError("need terms >= 1")
    s = complex(sigma, t)
    if abs(s - 1.0) < 1e-12:
        raise ValueError("zeta has a pole at s = 1")
    N = terms
    n = np.arange(1, N)
    total = complex(np.sum(n ** (-s))) if N > 1 else 0.0
    total += N ** (1.0 - s) / (s - 1.0) + 0.5 * N ** (-s)
    poch = s
    best_err = math.inf
    for k in range(1, 30):
        term = _BERNOULLI[2 * k] / math.factorial(2 * k) * poch * N ** (-s - 2 * k + 1.0)
        poch = poch * (s + 2 * k - 1) * (s + 2 * k)
        nxt = _BERNOULLI[2 * k + 2] / math.factorial(2 * k + 2) * poch * N ** (-s - 2 * k - 1.0)
        err = abs(nxt) * abs(s + 2 * k + 1) / abs(sigma + 2 * k + 1)
        if err > best_err:  # series started diverging; stop before this term
            break
        total += term
        best_err = err
        if err < 1e-18:
            break
    return total, best_err


def zeta_em_auto(sigma: float, t: float, target: float = 1e-10) -> tuple[complex, float]:
    """Euler-Maclaurin with a term count chosen for ~1e-10 accuracy."""
    N = max(20, int(abs(complex(sigma, t)) / 3.0))
    val, err = zeta_euler_maclaurin(sigma, t, N)
    while err > target and N < 10_000_000:
        N *= 2
        val, err = zeta_euler_maclaurin(sigma, t, N)
    return val, err


# -- Riemann-Siegel -----------------------------------------------------------

def rs_theta(t: float) -> float:
    """Riemann-Siegel theta by its asymptotic series (3 corrections).

    Accurate to well below 1e-10 for t >= 50.
    """
    if t <= 0:
        raise ValueError("rs_theta needs t > 0")
    return (t / 2.0 * math.log(t / _TWO_PI) - t / 2.0 - math.pi / 8.0
            + 1.0 / (48.0 * t) + 7.0 / (5760.0 * t ** 3) + 31.0 / (80640.0 * t ** 5))


def _psi_on_circle(p0: complex, radius: float, m: int) -> np.ndarray:
    ang = _TWO_PI * (np.arange(m) + 0.5) / m
    z = p0 + radius * np.exp(1j * ang)
    return np.cos(_TWO_PI * (z * z - z - 1.0 / 16.0)) / np.cos(_TWO_PI * z)


def _psi_derivs(p0: float, kmax: int = 9, radius: float = 0.25, m: int = 64) -> np.ndarray:
    """Psi^(k)(p0) for k = 0..kmax via the Cauchy integral (Psi is entire)."""
    vals = _psi_on_circle(complex(p0), radius, m)
    ks = np.arange(kmax + 1)
    ang = _TWO_PI * (np.arange(m) + 0.5) / m
    coef = (np.exp(-1j * np.outer(ks, ang)) @ vals) / m / radius ** ks
    fact = np.array([math.factorial(k) for k in ks], float)
    return (coef * fact).real


def _rs_correction_values(p: float) -> np.ndarray:
    d = _psi_derivs(p)
    pi2 = math.pi ** 2
    pi4 = pi2 * pi2
    pi6 = pi4 * pi2
    return np.array([
        d[0],
        -d[3] / (96.0 * pi2),
        d[2] / (64.0 * pi2) + d[6] / (18432.0 * pi4),
        -d[1] / (64.0 * pi2) - d[5] / (3840.0 * pi4) - d[9] / (5308416.0 * pi6),
    ])


_C_INTERP: list[Chebyshev] | None = None


def _c_interpolants() -> list[Chebyshev]:
    global _C_INTERP
    if _C_INTERP is None:
        _C_INTERP = [
            Chebyshev.interpolate(
                lambda x, j=j: np.array([_rs_correction_values(float(p))[j] for p in np.atleast_1d(x)]),
                deg=40, domain=[0.0, 1.0])
            for j in range(4)
        ]
    return _C_INTERP


def rs_corrections(p, terms: int = 4):
    """C_0..C_{terms-1} at fractional part(s) p, from cached interpolants."""
    cs = _c_interpolants()
    p = np.asarray(p, float)
    return np.stack([cs[j](p) for j in range(terms)])


def _rs_error_estimate(t, terms: int):
    coef = _RS_ERR_COEF[terms]
    return np.maximum(coef * np.asarray(t, float) ** (-(2.0 * terms + 3.0) / 4.0),
                      _RS_ERR_FLOOR)


def zeta_riemann_siegel(t: float, terms: int = 4) -> ZetaSample:
    """Hardy Z(t) by the Riemann-Siegel formula with `terms` corrections.

    Requires t >= 50; below that the asymptotic remainder is too weak and
    the Euler-Maclaurin path is the right tool.
    """
    if t < RS_MIN_T:
        raise ValueError(
            f"Riemann-Siegel path needs t >= {RS_MIN_T}; use zeta_euler_maclaurin")
    if not 1 <= terms <= 4:
        raise ValueError("terms must be in 1..4")
    srt = math.sqrt(t / _TWO_PI)
    N = int(srt)
    p = srt - N
    th = rs_theta(t)
    n = np.arange(1, N + 1, dtype=np.float64)
    main = 2.0 * float(np.sum(np.cos(th - t * np.log(n)) / np.sqrt(n)))
    x = (_TWO_PI / t) ** 0.25
    C = rs_corrections(p, terms)
    corr = float(sum(C[j] * x ** (2 * j) for j in range(terms)))
    z = main + (-1) ** (N - 1) * x * corr
    return ZetaSample(t=t, z_value=z, theta=th,
                      error_estimate=float(_rs_error_estimate(t, terms)))


def theta_exact(t: float) -> float:
    """theta(t) = Im log Gamma(1/4 + it/2) - (t/2) log pi, valid for all t."""
    from scipy.special import loggamma
    return float(loggamma(0.25 + 0.5j * t).imag - 0.5 * t * math.log(math.pi))


def zeta_critical(t: float, terms: int = 4) -> ZetaSample:
    """Z(t)/|zeta| at 1/2 + it for any t >= 0 (EM below the RS cutoff)."""
    if t >= RS_MIN_T:
        return zeta_riemann_siegel(t, terms)
    val, err = zeta_em_auto(0.5, t)
    th = theta_exact(t)
    z = (complex(math.cos(th), math.sin(th)) * val).real  # Z = e^{i theta} zeta
    return ZetaSample(t=t, z_value=z, theta=th, error_estimate=err)


# -- grid evaluation ----------------------------------------------------------

def log_abs_zeta_grid(tau: float, grid: HGrid, terms: int = 4) -> np.ndarray:
    """log|zeta(1/2 + i(tau+h))| over a grid, batching the RS main sum.

    Points sharing a main-sum length N are evaluated through one
    oscillatory-kernel contraction; corrections are vectorized through the
    Chebyshev tables.  Requires tau - half_width >= 50.
    """
    hs = grid.points()
    ts = tau + hs
    if ts[0] < RS_MIN_T:
        raise ValueError("grid extends below the Riemann-Siegel cutoff t=50")
    check_budget(grid.count * 8 * 8, "zeta grid evaluation")
    srt = np.sqrt(ts / _TWO_PI)
    Ns = srt.astype(np.int64)
    ps = srt - Ns
    th = (ts / 2.0 * np.log(ts / _TWO_PI) - ts / 2.0 - math.pi / 8.0
          + 1.0 / (48.0 * ts) + 7.0 / (5760.0 * ts ** 3) + 31.0 / (80640.0 * ts ** 5))
    z = np.empty(grid.count)
    x = (_TWO_PI / ts) ** 0.25
    C = rs_corrections(ps, terms)
    corr = np.zeros(grid.count)
    for j in range(terms):
        corr += C[j] * x ** (2 * j)
    corr *= np.where(Ns % 2 == 1, 1.0, -1.0) * x
    # contiguous runs of constant N share one batched main-sum evaluation
    start = 0
    while start < grid.count:
        stop = start
        while stop < grid.count and Ns[stop] == Ns[start]:
            stop += 1
        N = int(Ns[start])
        cnt = stop - start
        n = np.arange(1, N + 1, dtype=np.float64)
        logn = np.log(n)
        w = (n ** -0.5) * unit_phases_split(tau, hs[start], logn)
        if cnt >= 8:
            kern = OscillatoryGridKernel(logn, grid.spacing, cnt)
            sums = kern.sum_complex(w)
        else:
            sums = np.array([np.sum((n ** -0.5) * unit_phases_split(tau, hs[start + i], logn))
                             for i in range(cnt)])
        # Z = 2 Re(e^{i theta} sum n^{-1/2} e^{-i t log n}) + correction
        rot = np.cos(th[start:stop]) + 1j * np.sin(th[start:stop])
        z[start:stop] = 2.0 * (rot * sums).real + corr[start:stop]
        start = stop
    with np.errstate(divide="ignore"):
        return np.log(np.abs(z))


def max_zeta_on_interval(tau: float, theta: float, spacing: float | None = None
                         ) -> tuple[float, float, int]:
    """(argmax h, max log|zeta|, grid size) over the mesoscopic window.

    T is taken as the largest power of ten <= tau (ad-hoc query path; the
    experiment drivers fix T and draw tau instead).  Ties break toward
    smaller h.
    """
    if tau < RS_MIN_T:
        raise ValueError("need tau >= 50")
    if not -1.0 < theta <= 0.0:
        raise ValueError("theta must lie in (-1, 0]")
    T = 10.0 ** math.floor(math.log10(tau))
    logT = math.log(T)
    if spacing is None:
        spacing = 0.05 / logT
    if spacing > 0.1 / logT:
        raise ValueError(f"spacing {spacing} too coarse; need <= {0.1 / logT}")
    grid = HGrid(center=0.0, half_width=logT ** theta, spacing=spacing)
    check_budget(grid.count * 64, "zeta interval maximum grid")
    vals = log_abs_zeta_grid(tau, grid)
    idx = int(np.argmax(vals))
    return float(grid.points()[idx]), float(vals[idx]), grid.count
