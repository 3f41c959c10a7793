"""Randomized surrogates for the zeta walk.

Three models:

* RandomEulerProduct -- i.i.d. unit-circle multipliers Z_p replacing the
  phases p^{-i tau}; X_p(h) = Re(Z_p p^{-1/2-ih} + (1/2) Z_p^2 p^{-1-2ih}).
* GaussianWalk -- i.i.d. centered Gaussian increments of variance 1/2.
* BrwTree -- a b-ary branching random walk whose leaves model the grid
  points of a mesoscopic window.

Every random object is a pure function of a 64-bit stream seed.  Per-prime
multipliers come from a keyed hash of (seed, p): the hash output is mapped
to the unit circle by the squaring map of a uniform point in the disk
(rejection-sampled on an integer lattice), which keeps the whole path free
of libm trigonometry and therefore bit-reproducible across the numba and
numpy implementations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit, prange

from .dirichlet import HGrid
from .oscsum import OscillatoryGridKernel, unit_phases
from .primes import PrimeTable
from .resources import TruncationError

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_INC_SD = math.sqrt(0.5)


# -- splittable streams ------------------------------------------------------

def _fin_py(z: int) -> int:
    """splitmix64 finalizer on python ints."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_stream(seed: int, index: int) -> int:
    """Deterministic substream seed: splitmix64 output at position `index`.

    Distinct indices give statistically independent streams; the map is a
    pure function, so any worker can regenerate sample i from (seed, i).
    """
    if index < 0:
        raise ValueError("stream index must be >= 0")
    return _fin_py((seed + _GOLDEN * (index + 1)) & _MASK64)


def substream_rng(seed: int, index: int) -> np.random.Generator:
    """numpy Generator keyed to derive_stream(seed, index) via Philox."""
    return np.random.Generator(np.random.Philox(key=derive_stream(seed, index)))


# -- keyed-hash unit multipliers ---------------------------------------------

@njit(cache=True, inline="always")
def _fin(z):  # pragma: no cover - numba
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@njit(cache=True, inline="always")
def _disk_cos_sin(z):  # pragma: no cover - numba
    """Unit-circle point with angle 2*angle(U,V), (U,V) uniform in the disk."""
    HALF = np.int64(1) << np.int64(31)
    LIM = np.int64(1) << np.int64(62)
    while True:
        U = np.int64(2) * np.int64(z >> np.uint64(33)) + np.int64(1) - HALF
        V = np.int64(2) * np.int64((z >> np.uint64(2)) & np.uint64(0x7FFFFFFF)) \
            + np.int64(1) - HALF
        Q = U * U + V * V
        if Q <= LIM:
            break
        z = _fin(z + np.uint64(0x9E3779B97F4A7C15))
    qf = np.float64(Q)
    return np.float64(U * U - V * V) / qf, np.float64(2 * U * V) / qf


@njit(cache=True, parallel=True)
def _z_pairs(seed, keys, out_re, out_im):  # pragma: no cover - numba
    for i in prange(keys.size):
        c, s = _disk_cos_sin(_fin(seed ^ keys[i]))
        out_re[i] = c
        out_im[i] = s


@njit(cache=True, parallel=True)
def _sums_h0(seeds, keys, a1, a2, out):  # pragma: no cover - numba
    """out[s] = sum_p a1_p cos(theta) + a2_p cos(2 theta), one theta per (s,p)."""
    for s in prange(seeds.size):
        acc = 0.0
        base = seeds[s]
        for i in range(keys.size):
            c, _ = _disk_cos_sin(_fin(base ^ keys[i]))
            acc += a1[i] * c + a2[i] * (2.0 * c * c - 1.0)
        out[s] = acc


@njit(cache=True)
def _prefix_sums_h0(seed, keys, a1, a2, cuts, out):  # pragma: no cover - numba
    """Walk snapshots at h=0: out[j] = sum over the first cuts[j] primes."""
    acc = 0.0
    pos = 0
    for j in range(cuts.size):
        stop = cuts[j]
        while pos < stop:
            c, _ = _disk_cos_sin(_fin(seed ^ keys[pos]))
            acc += a1[pos] * c + a2[pos] * (2.0 * c * c - 1.0)
            pos += 1
        out[j] = acc


def _euler_keys(table: PrimeTable) -> np.ndarray:
    keys = getattr(table, "_euler_keys_cache", None)
    if keys is None:
        keys = (table.primes.astype(np.uint64)) * np.uint64(_GOLDEN)
        keys.setflags(write=False)
        object.__setattr__(table, "_euler_keys_cache", keys)
    return keys


def multipliers_for_primes(seed: int, primes: np.ndarray) -> np.ndarray:
    """Z_p for an arbitrary ascending array of primes (keyed on p itself)."""
    keys = np.asarray(primes, np.uint64) * np.uint64(_GOLDEN)
    out_re = np.empty(keys.size)
    out_im = np.empty(keys.size)
    _z_pairs(np.uint64(seed), keys, out_re, out_im)
    return out_re + 1j * out_im


@dataclass
class RandomEulerProduct:
    """Lazily materialized random multipliers Z_p tied to one stream seed."""

    seed: int
    table: PrimeTable
    _z: np.ndarray | None = field(default=None, repr=False)

    def multipliers(self, cut: int | None = None) -> np.ndarray:
        """Z_p for the first `cut` table primes (all by default)."""
        if self._z is None:
            keys = _euler_keys(self.table)
            out_re = np.empty(keys.size)
            out_im = np.empty(keys.size)
            _z_pairs(np.uint64(self.seed), keys, out_re, out_im)
            self._z = out_re + 1j * out_im
        return self._z if cut is None else self._z[:cut]

    def angles(self, cut: int | None = None) -> np.ndarray:
        """theta_p in [0, 2pi); Z_p = exp(i theta_p)."""
        z = self.multipliers(cut)
        return np.mod(np.arctan2(z.imag, z.real), 2.0 * math.pi)


def model_variance(table: PrimeTable, k: float, allow_truncation: bool = True) -> float:
    """Exact Var of the model sum at scale k: sum 1/(2p) + 1/(8p^2)."""
    if not allow_truncation and not table.covers_scale(k):
        raise TruncationError(f"model_variance at k={k} exceeds sieve limit {table.limit}")
    cut = table.cut_index(k)
    if cut == 0:
        return 0.0
    p = table.primes[:cut].astype(np.float64)
    return float(np.sum(0.5 / p + 0.125 / (p * p)))


def model_eval_X(model: RandomEulerProduct, k: float, h: float = 0.0,
                 allow_truncation: bool = False) -> float:
    """Model walk at scale k: sum of X_p(h) over log p <= e^k."""
    table = model.table
    if not allow_truncation and not table.covers_scale(k):
        raise TruncationError(f"model_eval_X at k={k} exceeds sieve limit {table.limit}")
    cut = table.cut_index(k)
    if cut == 0:
        return 0.0
    p = table.primes[:cut].astype(np.float64)
    z = model.multipliers(cut)
    if h == 0.0:
        return float(np.sum((p ** -0.5) * z.real + (0.5 / p) * (z * z).real))
    u = unit_phases(h, table.logp[:cut])
    return float(np.sum((p ** -0.5) * (z * u).real + (0.5 / p) * (z * z * u * u).real))


def model_eval_X_grid(model: RandomEulerProduct, k: float, grid: HGrid,
                      kernel: OscillatoryGridKernel | None = None,
                      allow_truncation: bool = False) -> np.ndarray:
    """Model walk over a full h-grid via the batched rotation kernel."""
    table = model.table
    if not allow_truncation and not table.covers_scale(k):
        raise TruncationError(f"model grid eval at k={k} exceeds sieve limit {table.limit}")
    cut = table.cut_index(k)
    if cut == 0:
        return np.zeros(grid.count)
    logp = table.logp[:cut]
    p = table.primes[:cut].astype(np.float64)
    z = model.multipliers(cut)
    u = unit_phases(grid.first, logp)
    w = np.concatenate([(p ** -0.5) * z * u, (0.5 / p) * (z * z) * (u * u)])
    if kernel is None:
        freqs = np.concatenate([logp, 2.0 * logp])
        kernel = OscillatoryGridKernel(freqs, grid.spacing, grid.count)
    return kernel.sum_real(w)


def model_walk_h0(table: PrimeTable, seed: int, cuts: np.ndarray) -> np.ndarray:
    """Model-walk snapshots at h = 0 for ascending prime-count cuts."""
    keys = _euler_keys(table)
    p = table.primes.astype(np.float64)
    a1 = p ** -0.5
    a2 = 0.5 / p
    cuts = np.asarray(cuts, np.int64)
    out = np.empty(cuts.size)
    _prefix_sums_h0(np.uint64(seed), keys, a1, a2, cuts, out)
    return out


def model_sums_h0(table: PrimeTable, k: float, seeds: np.ndarray) -> np.ndarray:
    """Model sums at h=0 and scale k for a whole batch of stream seeds."""
    cut = table.cut_index(k)
    p = table.primes[:cut].astype(np.float64)
    a1 = p ** -0.5
    a2 = 0.5 / p
    out = np.empty(len(seeds))
    _sums_h0(np.asarray(seeds, np.uint64), _euler_keys(table)[:cut], a1, a2, out)
    return out


# -- Gaussian walk ------------------------------------------------------------

@dataclass
class GaussianWalk:
    """Partial sums of i.i.d. N(0, 1/2) increments, W_0 = 0."""

    increments: np.ndarray

    @property
    def values(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.increments)])

    def __len__(self) -> int:
        return int(self.increments.size)


def sample_gaussian_walk(n: int, rng: np.random.Generator) -> GaussianWalk:
    if n < 0:
        raise ValueError("walk length must be >= 0")
    return GaussianWalk(increments=rng.normal(0.0, _INC_SD, n))


# -- branching random walk -----------------------------------------------------

@dataclass
class BrwTree:
    """Level-indexed increments of a b-ary Gaussian branching random walk.

    levels[l] has b^(l+1) entries: the edge increments entering depth l+1.
    Leaf values are root-to-leaf sums.
    """

    depth: int
    branching: int
    levels: list

    def leaf_values(self) -> np.ndarray:
        v = np.zeros(1)
        for inc in self.levels:
            v = np.repeat(v, self.branching) + inc
        return v

    @property
    def n_leaves(self) -> int:
        return self.branching ** self.depth


def sample_brw(depth: int, b: int, rng: np.random.Generator) -> BrwTree:
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if b < 2:
        raise ValueError("branching factor must be >= 2")
    levels = [rng.normal(0.0, _INC_SD, b ** (l + 1)) for l in range(depth)]
    return BrwTree(depth=depth, branching=b, levels=levels)


def brw_max(tree: BrwTree) -> float:
    """Maximum root-to-leaf sum."""
    return float(tree.leaf_values().max()) if tree.depth else 0.0


def brw_centering(depth: int, b: int) -> tuple[float, float]:
    """(m_n, theta*) for the b-ary walk with variance-1/2 increments.

    m_n = c n - (3/(2 theta*)) log n with velocity c = sigma sqrt(2 log b)
    and tail exponent theta* = c / sigma^2 (= 2 for the e-ary continuum
    normalization the zeta tail g(y, theta) lives in).
    """
    sigma2 = 0.5
    c = math.sqrt(2.0 * sigma2 * math.log(b))
    theta_star = c / sigma2
    m_n = c * depth - 1.5 / theta_star * math.log(depth) if depth > 0 else 0.0
    return m_n, theta_star
