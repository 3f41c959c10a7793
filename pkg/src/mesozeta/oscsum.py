"""Batched evaluation of oscillatory sums  sum_p w_p exp(-i x f_p)  on
arithmetic grids of x.

The grid kernel factors the phase over a two-level block decomposition:
with grid index i = a*B + b,

    exp(-i (x0 + i d) f) = exp(-i x0 f) * (e^{-i d f})^b * (e^{-i B d f})^a,

so the whole evaluation is two rotation tables (built by a cumulative
rotation recurrence, renormalized every 2^10 steps) contracted by real
matrix products.  Work is O(P*(B+A)) memory traffic plus O(P*H) flops
inside BLAS, instead of O(P*H) trigonometric calls.

Phase arguments x*f are reduced mod 2pi in double-double arithmetic once
they exceed 2^48; below that, plain products keep full accuracy.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

from .resources import check_budget

_TWO_PI_HI = 6.283185307179586
_TWO_PI_LO = 2.4492935982947064e-16
_SPLIT = 134217729.0  # 2^27 + 1, Dekker splitting constant
# switch to double-double phase reduction once the plain product x*f would
# round by more than ~1e-11 rad; keeps batched and scalar paths within the
# 1e-10 agreement contract at any tau
DD_THRESHOLD = 2.0 ** 17


def _two_prod(a: np.ndarray, b: np.ndarray):
    """Error-free product: a*b = p + e exactly (Dekker/Veltkamp)."""
    p = a * b
    ca = _SPLIT * a
    ahi = ca - (ca - a)
    alo = a - ahi
    cb = _SPLIT * b
    bhi = cb - (cb - b)
    blo = b - bhi
    e = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, e


def phases_mod_2pi(x: float, freqs: np.ndarray, freqs_lo: np.ndarray | None = None) -> np.ndarray:
    """x*freqs reduced to (-pi, pi], in double-double intermediates.

    `freqs_lo` is an optional low-order correction of the frequencies
    (e.g. the Newton residual of log p).
    """
    p, e = _two_prod(np.float64(x), freqs)
    if freqs_lo is not None:
        e = e + x * freqs_lo
    n = np.round(p / _TWO_PI_HI)
    q, eq = _two_prod(n, np.float64(_TWO_PI_HI))
    r = (p - q) - eq - n * _TWO_PI_LO + e
    # one wrap pass is enough: |r| < 2pi after the rounding above
    r = r - _TWO_PI_HI * np.round(r / _TWO_PI_HI)
    return r


def unit_phases(x: float, freqs: np.ndarray) -> np.ndarray:
    """exp(-i x freqs) as complex128, accurate for large x."""
    if freqs.size == 0:
        return np.empty(0, np.complex128)
    if abs(x) * float(np.max(np.abs(freqs))) > DD_THRESHOLD:
        ph = phases_mod_2pi(x, freqs)
    else:
        ph = x * freqs
    return np.cos(ph) - 1j * np.sin(ph)


def unit_phases_split(x_large: float, x_small: float, freqs: np.ndarray) -> np.ndarray:
    """exp(-i (x_large + x_small) freqs) without forming x_large + x_small.

    Adding a small offset to a large coordinate in double precision wipes
    out the offset's low bits (ulp(1e9) ~ 1e-7); splitting the phase as
    reduce(x_large*f) + x_small*f keeps the offset at full resolution.
    """
    if freqs.size == 0:
        return np.empty(0, np.complex128)
    if abs(x_large) * float(np.max(np.abs(freqs))) > DD_THRESHOLD:
        ph = phases_mod_2pi(x_large, freqs) + x_small * freqs
    else:
        ph = x_large * freqs + x_small * freqs
    return np.cos(ph) - 1j * np.sin(ph)


def osc_point(freqs: np.ndarray, weights: np.ndarray, x: float) -> complex:
    """sum_p weights_p exp(-i x freqs_p) at a single point (pairwise sum)."""
    if freqs.size == 0:
        return 0j
    return complex(np.sum(weights * unit_phases(x, freqs)))


@njit(cache=True, parallel=True)
def _build_rotations(wr, wi, cb, sb, ca, sa, Er, Ei, Gr, Gi):  # pragma: no cover
    n, B = Er.shape
    A = Gr.shape[1]
    for p in prange(n):
        xr = wr[p]
        xi = wi[p]
        c = cb[p]
        s = sb[p]
        for b in range(B):
            Er[p, b] = xr
            Ei[p, b] = xi
            tr = xr * c + xi * s
            xi = xi * c - xr * s
            xr = tr
            if (b & 1023) == 1023:
                norm = math.sqrt(xr * xr + xi * xi)
                if norm > 0.0:
                    inv = math.hypot(wr[p], wi[p]) / norm
                    xr *= inv
                    xi *= inv
        yr = 1.0
        yi = 0.0
        c = ca[p]
        s = sa[p]
        for a in range(A):
            Gr[p, a] = yr
            Gi[p, a] = yi
            tr = yr * c + yi * s
            yi = yi * c - yr * s
            yr = tr
            if (a & 1023) == 1023:
                norm = math.sqrt(yr * yr + yi * yi)
                if norm > 0.0:
                    yr /= norm
                    yi /= norm


class OscillatoryGridKernel:
    """Reusable evaluator of sum_p w_p exp(-i (x0 + i*step) f_p), i < count.

    The rotation trig tables depend only on (freqs, step, count) and are
    cached at construction, so evaluating many weight vectors (one per
    Monte Carlo sample) costs no trigonometry.
    """

    def __init__(self, freqs: np.ndarray, step: float, count: int):
        if count < 1:
            raise ValueError("count must be >= 1")
        if step <= 0 and count > 1:
            raise ValueError("step must be positive")
        self.freqs = np.ascontiguousarray(freqs, np.float64)
        self.step = float(step)
        self.count = int(count)
        self.B = int(math.ceil(math.sqrt(self.count)))
        self.A = (self.count + self.B - 1) // self.B
        n = self.freqs.size
        per_freq = 8 * (4 + 2 * 0)  # trig tables
        check_budget(per_freq * n, "oscillatory kernel trig tables")
        self.chunk = max(4096, min(1 << 17, int(8e6 / max(1, self.B + self.A))))
        d = self.step
        self._cb = np.cos(d * self.freqs)
        self._sb = np.sin(d * self.freqs)
        self._ca = np.cos(d * self.B * self.freqs)
        self._sa = np.sin(d * self.B * self.freqs)
        buf = 8 * 2 * self.chunk * (self.B + self.A)
        check_budget(buf, "oscillatory kernel rotation buffers")

    def _contract(self, weights: np.ndarray, want_imag: bool):
        n = self.freqs.size
        B, A = self.B, self.A
        out_r = np.zeros((A, B))
        out_i = np.zeros((A, B)) if want_imag else None
        wr = np.ascontiguousarray(weights.real)
        wi = np.ascontiguousarray(weights.imag)
        for lo in range(0, n, self.chunk):
            hi = min(lo + self.chunk, n)
            m = hi - lo
            Er = np.empty((m, B))
            Ei = np.empty((m, B))
            Gr = np.empty((m, A))
            Gi = np.empty((m, A))
            _build_rotations(wr[lo:hi], wi[lo:hi], self._cb[lo:hi], self._sb[lo:hi],
                             self._ca[lo:hi], self._sa[lo:hi], Er, Ei, Gr, Gi)
            out_r += Gr.T @ Er - Gi.T @ Ei
            if want_imag:
                out_i += Gr.T @ Ei + Gi.T @ Er
        return out_r, out_i

    def sum_real(self, weights: np.ndarray) -> np.ndarray:
        """Real parts of the grid sums for one complex weight vector."""
        if self.freqs.size == 0:
            return np.zeros(self.count)
        out_r, _ = self._contract(weights, want_imag=False)
        return out_r.ravel()[: self.count]

    def sum_complex(self, weights: np.ndarray) -> np.ndarray:
        if self.freqs.size == 0:
            return np.zeros(self.count, np.complex128)
        out_r, out_i = self._contract(weights, want_imag=True)
        return (out_r + 1j * out_i).ravel()[: self.count]
