"""Barrier curves, walk events, and ballot probabilities.

Houses the deterministic machinery the recursive upper-bound scheme runs
on: the linear centering m(k), the logarithmic upper/lower envelopes
U_y(k), L_y(k) around it, the partial barrier U_A(k) that buys the 1/sqrt(t)
ballot factor, the iterated-log schedule t_l, the A/B/C/G_A walk events,
a density-propagation ballot oracle for the variance-1/2 Gaussian walk,
and the closed-form asymptotic the oracle is compared against.

Infinities are explicit sentinels (math.inf) and flow through comparisons;
nothing here overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .dirichlet import WalkTrajectory

_INC_SD = math.sqrt(0.5)

S_CONST_MAX = 1.0e6  # default large constant for the max-bound scheme


def s_const_large_deviation(alpha: float) -> float:
    """The Theorem-1.5-style constant 2e6 / (alpha^2 (2-alpha)^2)."""
    if not 0.0 < alpha < 2.0:
        raise ValueError("alpha must lie in (0, 2)")
    return 2.0e6 / (alpha * alpha * (2.0 - alpha) ** 2)


@dataclass
class BarrierSpec:
    """Scales and constants for one barrier scheme.

    mode "max" carries the level y >= 1 of the upper/lower envelopes;
    mode "partial" carries the offset A >= 1 and slope parameter alpha of
    the large-deviation barrier.  log_coeff and lower_slope default to the
    paper constants (1e3 and 20) but are exposed so desk-scale studies can
    shrink them; s_const likewise.
    """

    t: float
    theta: float
    mode: str = "max"
    y: float | None = None
    A: float | None = None
    alpha: float | None = None
    s_const: float | None = None
    log_coeff: float = 1.0e3
    lower_slope: float = 20.0
    a_coeff: float = 1.0e3

    def __post_init__(self):
        if not -1.0 < self.theta <= 0.0:
            raise ValueError("theta must lie in (-1, 0]")
        if self.t <= 0:
            raise ValueError("t must be positive")
        if self.mode not in ("max", "partial"):
            raise ValueError("mode must be 'max' or 'partial'")
        if self.mode == "max":
            if self.y is None:
                self.y = 1.0
            if self.y < 1.0:
                raise ValueError("y must be >= 1")
            if self.s_const is None:
                self.s_const = S_CONST_MAX
        else:
            if self.A is None or self.A < 1.0:
                raise ValueError("partial mode needs A >= 1")
            if self.alpha is None:
                raise ValueError("partial mode needs alpha")
            if not 0.0 < self.alpha < 2.0:
                raise ValueError("alpha must lie in (0, 2)")
            if self.s_const is None:
                self.s_const = s_const_large_deviation(self.alpha)
        if self.t_prime <= 0:
            raise ValueError("t(1+theta) must be positive")

    @property
    def t_prime(self) -> float:
        return self.t * (1.0 + self.theta)

    @property
    def t_theta(self) -> float:
        return self.t * abs(self.theta)

    @property
    def t0(self) -> float:
        return self.t_prime / 2.0

    @property
    def t1(self) -> float:
        return self.schedule_time(1)

    def schedule_time(self, ell: int) -> float:
        """t_l = t' - s * log_l t' with the l-times iterated logarithm."""
        if ell < 1:
            raise ValueError("schedule index starts at 1")
        x = self.t_prime
        for _ in range(ell):
            if x <= 0:
                raise ValueError(f"iterated log undefined at schedule index {ell}")
            x = math.log(x)
        return self.t_prime - self.s_const * x


def centering_m(spec: BarrierSpec, k: float) -> float:
    """Deterministic centering m(k) = k (1 - (3/4) log t' / t')."""
    if k < 0:
        raise ValueError("k must be >= 0")
    tp = spec.t_prime
    return k * (1.0 - 0.75 * math.log(tp) / tp)


def upper_barrier_U(spec: BarrierSpec, k: float) -> float:
    """Upper envelope U_y(k); +inf below scale y/4, log-shaped above.

    Branch boundaries overlap in the source curves; ties resolve to the
    later (finite) branch at y/4 and to the log(t'-k) branch at t0, where
    the two logarithms agree anyway.
    """
    y = spec.y
    tp = spec.t_prime
    if not 1.0 <= k < tp:
        raise ValueError(f"need 1 <= k < t'={tp}, got k={k}")
    if k < y / 4.0:
        return math.inf
    if k < spec.t0:
        return y + spec.log_coeff * math.log(k)
    return y + spec.log_coeff * math.log(tp - k)


def lower_barrier_L(spec: BarrierSpec, k: float) -> float:
    """Lower envelope L_y(k); -inf below scale y/4, linear cone above."""
    y = spec.y
    tp = spec.t_prime
    if not 1.0 <= k < tp:
        raise ValueError(f"need 1 <= k < t'={tp}, got k={k}")
    if k < y / 4.0:
        return -math.inf
    if k < spec.t0:
        return y - spec.lower_slope * k
    return y - spec.lower_slope * (tp - k)


def partial_barrier_UA(spec: BarrierSpec, k: float) -> float:
    """U_A(k) = A + m(k) + log_coeff * log(t' - k), defined for k <= t1."""
    if spec.mode != "partial":
        raise ValueError("U_A needs a partial-mode BarrierSpec")
    if not 0.0 <= k <= spec.t1:
        raise ValueError(f"need 0 <= k <= t1={spec.t1}, got k={k}")
    return spec.A + centering_m(spec, k) + spec.log_coeff * math.log(spec.t_prime - k)


# -- events --------------------------------------------------------------------

@dataclass
class EventFlags:
    """Outcome of the A/B/C/G_A predicates on one sampled trajectory.

    first_violation maps event name to the earliest sampled time at which
    it failed (absent if the event holds).  Events are checked at the
    trajectory's sampled times only.
    """

    a_ok: bool
    b_ok: bool
    c_ok: bool
    ga_ok: bool
    first_violation: dict = field(default_factory=dict)
    window_ok: bool | None = None

    def bitmask(self) -> int:
        bits = (self.a_ok, self.b_ok, self.c_ok, self.ga_ok)
        return sum(1 << i for i, ok in enumerate(bits) if ok)


def _interval_edges(spec: BarrierSpec, up_to: float) -> list[float]:
    """Schedule edges [t0, t1, t2, ...] clipped to the walk horizon."""
    edges = [spec.t0]
    ell = 1
    while True:
        try:
            tl = spec.schedule_time(ell)
        except ValueError:
            break
        if tl <= edges[-1]:
            ell += 1
            if ell > 64:
                break
            continue
        edges.append(tl)
        if tl >= up_to:
            break
        ell += 1
    return edges


def check_events(traj: WalkTrajectory, spec: BarrierSpec,
                 window: tuple[int, float] | None = None) -> EventFlags:
    """Evaluate the barrier events on a sampled walk.

    A: over each schedule interval, |walk(k) - walk(ref)| stays below
       a_coeff * (interval length), ref being the last sample at or before
       the interval start.  B: walk <= m + U_y.  C: walk > m + L_y.
       G_A: walk <= U_A up to t1 (partial mode only; vacuous otherwise).
    window = (ell, v) additionally tests walk(t_ell) in (v, v+1].
    """
    times = traj.times
    vals = traj.values
    tp = spec.t_prime
    flags = EventFlags(a_ok=True, b_ok=True, c_ok=True, ga_ok=True)

    in_range = (times >= 1.0) & (times < tp)
    if spec.mode == "max":
        for i in np.nonzero(in_range)[0]:
            k = float(times[i])
            m = centering_m(spec, k)
            if flags.b_ok and not vals[i] <= m + upper_barrier_U(spec, k):
                flags.b_ok = False
                flags.first_violation["B"] = k
            if flags.c_ok and not vals[i] > m + lower_barrier_L(spec, k):
                flags.c_ok = False
                flags.first_violation["C"] = k
    if spec.mode == "partial":
        t1 = spec.t1
        for i in np.nonzero((times >= 0.0) & (times <= t1))[0]:
            k = float(times[i])
            if not vals[i] <= partial_barrier_UA(spec, k):
                flags.ga_ok = False
                flags.first_violation["G_A"] = k
                break

    # A-event: increment bound per schedule interval
    if times.size:
        edges = [float(times[0])] + _interval_edges(spec, float(times[-1]))
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi <= lo:
                continue
            ref_idx = np.nonzero(times <= lo)[0]
            ref = vals[ref_idx[-1]] if ref_idx.size else 0.0
            sel = np.nonzero((times > lo) & (times <= hi))[0]
            bound = spec.a_coeff * (hi - lo)
            for i in sel:
                if abs(vals[i] - ref) > bound:
                    flags.a_ok = False
                    flags.first_violation.setdefault("A", float(times[i]))
                    break
            if not flags.a_ok:
                break

    if window is not None:
        ell, v = window
        tl = spec.t0 if ell == 0 else spec.schedule_time(ell)
        idx = np.nonzero(times <= tl)[0]
        if idx.size:
            wv = vals[idx[-1]]
            flags.window_ok = bool(v < wv <= v + 1.0)
        else:
            flags.window_ok = None
    return flags


# -- ballot probabilities --------------------------------------------------------

@dataclass
class BallotResult:
    """Richardson-extrapolated barrier probability with an error estimate."""

    probability: float
    error_estimate: float
    eta: float
    tilt: float
    converged: bool = True


def _as_barrier_array(barrier, n: int) -> np.ndarray:
    if callable(barrier):
        return np.array([barrier(j) for j in range(1, n + 1)], float)
    arr = np.asarray(barrier, float)
    if arr.ndim == 0:
        return np.full(n, float(arr))
    if arr.size != n:
        raise ValueError(f"barrier must have length n={n}")
    return arr.copy()


def _ballot_dp_raw(n: int, barrier: np.ndarray, a: float, b: float,
                   eta: float, lam: float, start: float, n_sigma: float) -> float:
    drift = lam * 0.5  # tilted mean per step
    span = n_sigma * _INC_SD * math.sqrt(n)
    lo = start - math.ceil((span - min(0.0, n * drift)) / eta) * eta
    hi = start + max(0.0, n * drift) + span
    finite = barrier[np.isfinite(barrier)]
    if finite.size == n:
        hi = min(hi, float(finite.max()) + eta)
    if math.isfinite(b):
        hi = min(hi, b + eta)
    hi = max(hi, lo + 10 * eta)
    m = int(math.ceil((hi - lo) / eta)) + 1
    x = lo + eta * np.arange(m)
    k_lo = int(math.floor((drift - 8.5 * _INC_SD) / eta))
    k_hi = int(math.ceil((drift + 8.5 * _INC_SD) / eta))
    kern = norm.pdf(np.arange(k_lo, k_hi + 1) * eta, loc=drift, scale=_INC_SD) * eta
    f = np.zeros(m)
    f[int(round((start - lo) / eta))] = 1.0
    shift = -k_lo
    for j in range(1, n + 1):
        g = np.convolve(f, kern, mode="full")
        if shift >= 0:
            f = g[shift: shift + m]
        else:
            f = np.concatenate([np.zeros(-shift), g[: shift + m]])
        bj = barrier[j - 1]
        if math.isfinite(bj):
            f = f * np.clip((bj - x) / eta + 0.5, 0.0, 1.0)
    sel = f
    if math.isfinite(a):
        sel = sel * np.clip((x - a) / eta + 0.5, 0.0, 1.0)
    if math.isfinite(b):
        sel = sel * np.clip((b - x) / eta + 0.5, 0.0, 1.0)
    if lam != 0.0:
        sel = sel * np.exp(-lam * (x - start) + n * lam * lam * 0.25)
    return float(sel.sum())


def ballot_dp(n: int, barrier, window: tuple[float, float] = (-math.inf, math.inf),
              start: float = 0.0, eta: float = 0.02, tilt: float | None = None,
              n_sigma: float = 12.0, tol: float | None = None) -> BallotResult:
    """P(W_j <= barrier(j) for j <= n, W_n in window) for the N(0,1/2) walk.

    Density propagation on an eta-grid with partial-cell barrier masking;
    one Richardson halving supplies the returned value and a conservative
    |p(eta) - p(eta/2)| error estimate.  Deep-tail windows are handled by
    exponential tilting (automatic: lam = 2*midpoint/n); the tilt is exact
    reweighting, not an approximation.  Barrier entries may be +inf.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if eta <= 0:
        raise ValueError("eta must be positive")
    a, b = window
    if not a < b:
        raise ValueError("window must be a nonempty interval (a, b)")
    arr = _as_barrier_array(barrier, n)
    if tilt is None:
        if math.isfinite(a) and math.isfinite(b):
            mid = 0.5 * (a + b)
        elif math.isfinite(a):
            mid = a
        elif math.isfinite(b):
            mid = b
        else:
            mid = 0.0
        tilt = 2.0 * (mid - start) / n if abs(mid - start) > 2.0 * _INC_SD * math.sqrt(n) else 0.0
    p1 = _ballot_dp_raw(n, arr, a, b, eta, tilt, start, n_sigma)
    p2 = _ballot_dp_raw(n, arr, a, b, eta / 2.0, tilt, start, n_sigma)
    rich = p2 + (p2 - p1) / 3.0
    err = abs(p2 - p1)
    converged = True
    if tol is not None and err > tol:
        converged = False
    return BallotResult(probability=max(rich, 0.0), error_estimate=err,
                        eta=eta, tilt=tilt, converged=converged)


def ballot_asymptotic(A: float, V: float, t1: float, t_prime: float,
                      log_coeff: float = 1.0e3) -> float:
    """The closed-form target A (U_A(t1) - V t1/t') / t1 * e^{-V^2/t'} / sqrt(t').

    Evaluated exactly as written; U_A uses the same log coefficient as the
    barrier it is compared to.
    """
    if t1 <= 0 or t_prime <= t1:
        raise ValueError("need 0 < t1 < t_prime")
    ua_t1 = A + t1 * (1.0 - 0.75 * math.log(t_prime) / t_prime) \
        + log_coeff * math.log(t_prime - t1)
    return A * (ua_t1 - V * (t1 / t_prime)) / t1 \
        * math.exp(-V * V / t_prime) / math.sqrt(t_prime)


def shape_ratio(n: int, A: float = 1.0, alpha: float = 1.0,
                t1_fraction: float = 0.9, log_coeff: float = 1.5,
                eta: float = 0.02) -> float:
    """DP-to-asymptotic ratio R(n) for the desk-scaled U_A scheme.

    The walk has length n = t', the barrier follows the U_A shape up to
    t1 = t1_fraction * n, and the window is [V, V+1] with V = alpha*n.
    The paper's s-constant (~2e6) would put t1 < 0 at any feasible n, so
    the desk scheme fixes t1 as a fraction of the horizon instead; the
    log coefficient shrinks in proportion.  R(2n)/R(n) close to 1 is the
    testable content of the shape claim.
    """
    tp = float(n)
    V = alpha * tp
    t1 = t1_fraction * tp
    slope = 1.0 - 0.75 * math.log(tp) / tp

    def ua(k: float) -> float:
        return A + k * slope + log_coeff * math.log(tp - k)

    barrier = np.array([ua(j) if j <= t1 else math.inf for j in range(1, n + 1)])
    res = ballot_dp(n, barrier, window=(V, V + 1.0), eta=eta, tilt=2.0 * V / n)
    asym = A * (ua(t1) - V * (t1 / tp)) / t1 * math.exp(-V * V / tp) / math.sqrt(tp)
    return res.probability / asym
