"""Moebius mollifiers: sparse Dirichlet polynomials approximating exp(-S).

A mollifier over a prime scale range is sum_m mu(m)/sqrt(m) * phase(m),
with m squarefree, every prime factor inside the range, and the factor
count capped.  Under the random Euler model the phase of m is the product
of the per-prime multipliers Z_p, so the mollifier couples to the same
randomness as the walk it mollifies; that coupling is what the
approximation inequality check exercises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .models import RandomEulerProduct, derive_stream, multipliers_for_primes
from .oscsum import unit_phases
from .primes import PrimeTable, primes_in_scale
from .resources import MemoryBudgetError

DEFAULT_TERM_CAP = 2_000_000


def mobius_mu(n: int) -> int:
    """mu(n): (-1)^(number of prime factors) on squarefree n, else 0."""
    if n < 1:
        raise ValueError("mu is defined for n >= 1")
    if n == 1:
        return 1
    count = 0
    d = 2
    while d * d <= n:
        if n % d == 0:
            n //= d
            if n % d == 0:
                return 0
            count += 1
        d += 1 if d == 2 else 2
    if n > 1:
        count += 1
    return -1 if count % 2 else 1


def big_omega(n: int) -> int:
    """Omega(n): prime divisors counted with multiplicity."""
    if n < 1:
        raise ValueError("Omega is defined for n >= 1")
    count = 0
    d = 2
    while d * d <= n:
        while n % d == 0:
            n //= d
            count += 1
        d += 1 if d == 2 else 2
    if n > 1:
        count += 1
    return count


@dataclass
class MollifierPoly:
    """Sparse mollifier terms over one prime scale range.

    terms m are ascending; coeffs[i] = mu(m_i)/sqrt(m_i).  factor_indptr /
    factor_idx give each term's prime factors as indices into `primes`
    (CSR layout), so model-mode evaluation can rebuild Z_m = prod Z_p.
    """

    k_lo: float
    k_hi: float
    omega_bound: int
    m_limit: int
    primes: np.ndarray
    m_values: np.ndarray
    coeffs: np.ndarray
    factor_indptr: np.ndarray
    factor_idx: np.ndarray
    logm: np.ndarray = field(init=False)

    def __post_init__(self):
        self.logm = np.log(self.m_values.astype(np.float64))

    def __len__(self) -> int:
        return int(self.m_values.size)

    def omega_of_term(self, i: int) -> int:
        return int(self.factor_indptr[i + 1] - self.factor_indptr[i])


def build_mollifier(table: PrimeTable, k_lo: float, k_hi: float,
                    omega_bound: int, m_limit: int,
                    term_cap: int = DEFAULT_TERM_CAP) -> MollifierPoly:
    """Enumerate all admissible m <= m_limit by depth-first search.

    Admissible: squarefree, prime support in the scale window (k_lo, k_hi],
    at most omega_bound factors.  m = 1 is always present.
    """
    if omega_bound < 0:
        raise ValueError("omega_bound must be >= 0")
    if m_limit < 1:
        raise ValueError("m_limit must be >= 1")
    sl = primes_in_scale(table, k_lo, k_hi)
    rp = sl.primes
    out_m: list[int] = [1]
    out_factors: list[tuple[int, ...]] = [()]

    def dfs(next_idx: int, m: int, factors: tuple[int, ...]) -> None:
        for j in range(next_idx, rp.size):
            nm = m * int(rp[j])
            if nm > m_limit:
                break
            fs = factors + (j,)
            out_m.append(nm)
            out_factors.append(fs)
            if len(out_m) > term_cap:
                raise MemoryBudgetError(
                    f"mollifier exceeds the {term_cap}-term cap")
            if len(fs) < omega_bound:
                dfs(j + 1, nm, fs)

    if omega_bound >= 1:
        dfs(0, 1, ())
    order = np.argsort(np.asarray(out_m, dtype=np.int64), kind="stable")
    m_values = np.asarray(out_m, dtype=np.int64)[order]
    factors = [out_factors[i] for i in order]
    coeffs = np.array([(-1.0) ** len(f) / math.sqrt(m)
                       for m, f in zip(m_values.tolist(), factors)])
    indptr = np.zeros(len(factors) + 1, np.int64)
    for i, f in enumerate(factors):
        indptr[i + 1] = indptr[i] + len(f)
    idx = np.concatenate([np.asarray(f, np.int64) for f in factors]) \
        if indptr[-1] else np.empty(0, np.int64)
    return MollifierPoly(k_lo=k_lo, k_hi=k_hi, omega_bound=omega_bound,
                         m_limit=m_limit, primes=rp.copy(),
                         m_values=m_values, coeffs=coeffs,
                         factor_indptr=indptr, factor_idx=idx)


def _term_multipliers(poly: MollifierPoly, z: np.ndarray) -> np.ndarray:
    """Z_m per term from per-prime multipliers (1 for the empty product)."""
    out = np.ones(len(poly), np.complex128)
    indptr = poly.factor_indptr
    for i in range(len(poly)):
        for j in range(indptr[i], indptr[i + 1]):
            out[i] *= z[poly.factor_idx[j]]
    return out


def eval_mollifier(poly: MollifierPoly, source, h: float = 0.0) -> complex:
    """Evaluate the mollifier at offset h.

    `source` is either a real tau (phases m^{-i(tau+h)}) or a
    RandomEulerProduct (phases Z_m m^{-ih}).
    """
    if isinstance(source, RandomEulerProduct):
        z = multipliers_for_primes(source.seed, poly.primes)
        phases = _term_multipliers(poly, z)
        if h != 0.0:
            phases = phases * unit_phases(h, poly.logm)
    else:
        tau = float(source)
        phases = unit_phases(tau + h, poly.logm)
    return complex(np.sum(poly.coeffs * phases))


def eval_mollifier_model_batch(poly: MollifierPoly, seeds, h: float = 0.0,
                               chunk: int = 4096) -> np.ndarray:
    """Model-mode mollifier values for many stream seeds at once."""
    seeds = np.asarray(seeds, np.uint64)
    nterms = len(poly)
    indptr = poly.factor_indptr
    omegas = np.diff(indptr)
    out = np.empty(seeds.size, np.complex128)
    hrot = unit_phases(h, poly.logm) if h != 0.0 else None
    for lo in range(0, seeds.size, chunk):
        hi = min(lo + chunk, seeds.size)
        zs = np.empty((hi - lo, poly.primes.size), np.complex128)
        for r, s in enumerate(seeds[lo:hi].tolist()):
            zs[r] = multipliers_for_primes(int(s), poly.primes)
        zm = np.ones((hi - lo, nterms), np.complex128)
        depth = int(omegas.max()) if nterms else 0
        for d in range(depth):
            sel = np.nonzero(omegas > d)[0]
            zm[:, sel] *= zs[:, poly.factor_idx[indptr[sel] + d]]
        w = poly.coeffs * hrot if hrot is not None else poly.coeffs
        out[lo:hi] = zm @ w
    return out


@dataclass
class MollifierCheckReport:
    """Outcome of the exp(-S) approximation inequality on model draws."""

    samples: int
    conditioned: int
    satisfied: int
    worst_ratio: float
    factor: float
    additive: float

    @property
    def conditional_fraction(self) -> float:
        return self.satisfied / self.conditioned if self.conditioned else float("nan")


def check_mollifier_inequality(table: PrimeTable, seed: int, k_lo: float,
                               k_hi: float, omega_bound: int, m_limit: int,
                               samples: int, a_coeff: float = 1.0e3,
                               err_coeff: float = 1.0e5) -> MollifierCheckReport:
    """Test exp(-(S_k - S_klo)) <= (1+e^{-k_lo}) |M| + e^{-err_coeff (k_hi-k_lo)}
    on random-model draws, conditioned on the increment bound (A-event).

    The walk increment and the mollifier share the same multipliers Z_p
    draw by draw.  Reports the conditional satisfaction fraction and the
    worst LHS/RHS ratio; never raises on violations.
    """
    poly = build_mollifier(table, k_lo, k_hi, omega_bound, m_limit)
    sl = primes_in_scale(table, k_lo, k_hi)
    p = sl.primes.astype(np.float64)
    a1 = p ** -0.5
    a2 = 0.5 / p
    factor = 1.0 + math.exp(-k_lo)
    additive = math.exp(-err_coeff * (k_hi - k_lo))
    a_bound = a_coeff * (k_hi - k_lo)
    conditioned = satisfied = 0
    worst = 0.0
    for i in range(samples):
        z = multipliers_for_primes(derive_stream(seed, i), sl.primes)
        tilde_inc = np.sum(a1 * z + a2 * z * z)
        if abs(tilde_inc) > a_bound:
            continue
        conditioned += 1
        lhs = math.exp(-tilde_inc.real)
        mval = abs(np.sum(poly.coeffs * _term_multipliers(poly, z)))
        rhs = factor * mval + additive
        ratio = lhs / rhs if rhs > 0 else math.inf
        worst = max(worst, ratio)
        if lhs <= rhs:
            satisfied += 1
    return MollifierCheckReport(samples=samples, conditioned=conditioned,
                                satisfied=satisfied, worst_ratio=worst,
                                factor=factor, additive=additive)
