"""Deterministic prime sums S_k(h) approximating log|zeta(1/2 + i(tau+h))|.

S_k(h) sums Re(p^{-1/2-i(tau+h)} + (1/2) p^{-1-2i(tau+h)}) over log p <= e^k.
The shifted walk subtracts the value at scale t_theta, which is the walk a
branching-random-walk picture starts after the common ancestor.  Scalar
evaluation, trajectories on arbitrary ascending time sets, and batched
evaluation over h-grids all consume the same PrimeTable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .oscsum import OscillatoryGridKernel, unit_phases_split
from .primes import PrimeTable
from .resources import TruncationError

WALK_KINDS = ("S", "S_tilde_real", "shifted", "gaussian", "model")


@dataclass
class HGrid:
    """Evenly spaced, symmetric offsets around a center point.

    count = 2*floor(half_width/spacing) + 1, so the center is always a
    grid point and the grid is symmetric about it.
    """

    center: float
    half_width: float
    spacing: float

    def __post_init__(self):
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        if self.half_width < 0:
            raise ValueError("half_width must be >= 0")

    @property
    def n_half(self) -> int:
        return int(math.floor(self.half_width / self.spacing))

    @property
    def count(self) -> int:
        return 2 * self.n_half + 1

    def points(self) -> np.ndarray:
        return self.center + self.spacing * (np.arange(self.count) - self.n_half)

    @property
    def first(self) -> float:
        return self.center - self.n_half * self.spacing


@dataclass
class WalkTrajectory:
    """A walk sampled on an ascending set of scale times."""

    times: np.ndarray
    values: np.ndarray
    kind: str
    origin: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, np.float64)
        self.values = np.asarray(self.values, np.float64)
        if self.kind not in WALK_KINDS:
            raise ValueError(f"unknown walk kind {self.kind!r}")
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have the same shape")
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        if self.times.size and not np.all(np.isfinite(self.values)):
            raise ValueError("trajectory values must be finite")
        if self.kind == "shifted" and self.times.size:
            at0 = np.nonzero(self.times == 0.0)[0]
            if at0.size and self.values[at0[0]] != 0.0:
                raise ValueError("shifted walk must vanish at time 0")

    def increments(self) -> np.ndarray:
        return np.diff(self.values)


def _check_args(tau: float, h: float) -> None:
    if not (math.isfinite(tau) and math.isfinite(h)):
        raise ValueError(f"tau and h must be finite, got tau={tau}, h={h}")


def _check_scale(table: PrimeTable, k: float, allow_truncation: bool) -> None:
    if not allow_truncation and not table.covers_scale(k):
        raise TruncationError(
            f"scale k={k} needs sieve limit >= exp(e^k) > {table.limit}")


def _tilde_terms(table: PrimeTable, cut: int, tau: float, h: float) -> np.ndarray:
    """Per-prime complex terms of S-tilde for the first `cut` primes."""
    logp = table.logp[:cut]
    p = table.primes[:cut].astype(np.float64)
    u = unit_phases_split(tau, h, logp)
    return (p ** -0.5) * u + (0.5 / p) * (u * u)


def eval_S_tilde(table: PrimeTable, k: float, tau: float, h: float,
                 allow_truncation: bool = False) -> complex:
    """Complex prime sum over log p <= e^k; its real part is eval_S."""
    _check_args(tau, h)
    _check_scale(table, k, allow_truncation)
    cut = table.cut_index(k)
    if cut == 0:
        return 0j
    return complex(np.sum(_tilde_terms(table, cut, tau, h)))


def eval_S(table: PrimeTable, k: float, tau: float, h: float,
           allow_truncation: bool = False) -> float:
    """S_k(h); bit-identical to Re(eval_S_tilde) by construction."""
    return eval_S_tilde(table, k, tau, h, allow_truncation).real


def eval_shifted(table: PrimeTable, k: float, t_theta: float, tau: float,
                 h: float, allow_truncation: bool = False) -> float:
    """Shifted walk S_{t_theta + k} - S_{t_theta}; zero at k = 0."""
    if k < 0:
        raise ValueError(f"shifted-walk time must be >= 0, got {k}")
    if k == 0:
        return 0.0
    return (eval_S(table, t_theta + k, tau, h, allow_truncation)
            - eval_S(table, t_theta, tau, h, allow_truncation))


def walk_trajectory(table: PrimeTable, times, tau: float, h: float,
                    kind: str = "S", t_theta: float = 0.0,
                    allow_truncation: bool = False) -> WalkTrajectory:
    """Sample S_k (or the shifted walk) on an ascending time set.

    Values at each time agree bit-for-bit with the scalar evaluators:
    all prefixes are summed from one shared per-prime term array.
    """
    times = np.asarray(times, np.float64)
    if times.size > 1 and not np.all(np.diff(times) > 0):
        raise ValueError("times must be strictly increasing")
    _check_args(tau, h)
    if kind not in ("S", "shifted"):
        raise ValueError("walk_trajectory builds kind 'S' or 'shifted'")
    offset = t_theta if kind == "shifted" else 0.0
    if kind == "shifted" and times.size and times[0] < 0:
        raise ValueError("shifted-walk times must be >= 0")
    top = (times[-1] + offset) if times.size else -math.inf
    _check_scale(table, top, allow_truncation)
    cut_top = table.cut_index(top)
    terms = _tilde_terms(table, cut_top, tau, h)
    values = np.empty(times.size)
    base = np.sum(terms[: table.cut_index(t_theta)]).real if kind == "shifted" else 0.0
    for i, t_i in enumerate(times):
        cut = table.cut_index(t_i + offset)
        values[i] = np.sum(terms[:cut]).real - base
    if kind == "shifted" and times.size and times[0] == 0.0:
        values[0] = 0.0
    return WalkTrajectory(times=times, values=values, kind=kind,
                          origin={"tau": tau, "h": h, "t_theta": t_theta})


def eval_grid(table: PrimeTable, k: float, tau: float, grid: HGrid,
              allow_truncation: bool = False,
              kernel: OscillatoryGridKernel | None = None) -> np.ndarray:
    """S_k at every grid offset, via the blocked rotation kernel.

    Agrees with scalar eval_S to ~1e-12 absolute; the batched contraction
    reassociates the sum over primes.  A prebuilt kernel for the matching
    (frequency set, spacing, count) can be passed to amortize trig setup.
    """
    _check_args(tau, grid.center)
    _check_scale(table, k, allow_truncation)
    cut = table.cut_index(k)
    if cut == 0:
        return np.zeros(grid.count)
    logp = table.logp[:cut]
    p = table.primes[:cut].astype(np.float64)
    if kernel is None:
        kernel = grid_kernel(table, k, grid)
    u = unit_phases_split(tau, grid.first, logp)
    w = np.concatenate([(p ** -0.5) * u, (0.5 / p) * (u * u)])
    return kernel.sum_real(w)


def grid_kernel(table: PrimeTable, k: float, grid: HGrid) -> OscillatoryGridKernel:
    """Build the reusable rotation kernel for eval_grid at scale k."""
    cut = table.cut_index(k)
    logp = table.logp[:cut]
    freqs = np.concatenate([logp, 2.0 * logp])
    return OscillatoryGridKernel(freqs, grid.spacing, grid.count)
