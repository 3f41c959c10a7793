"""Segmented prime sieve with per-prime logarithms and scale buckets.

Scale here always means the doubly-logarithmic variable k: a prime p sits
at scale k when log p <= e^k.  Bucket j holds the primes with
e^(j-1) < log p <= e^j (bucket 0: log p <= 1, i.e. p = 2), so walks over
the scale axis can iterate buckets without searching.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .resources import TruncationError, check_budget

_CACHE_MAGIC = b"MZPT"
_CACHE_VERSION = 1

DEFAULT_SEGMENT = 1 << 20  # numbers per sieve segment


def _estimate_prime_count(limit: int) -> int:
    if limit < 20:
        return 10
    x = float(limit)
    return int(x / (math.log(x) - 1.1)) + 16


def sieve_primes(limit: int, segment_size: int = DEFAULT_SEGMENT) -> "PrimeTable":
    """Sieve all primes <= limit into a PrimeTable.

    Odd-only segmented Eratosthenes; memory stays bounded by the segment
    plus the output arrays, which are checked against the memory budget.
    """
    if limit < 0:
        raise ValueError(f"limit must be >= 0, got {limit}")
    check_budget(24 * _estimate_prime_count(limit), f"prime table to {limit}")
    if limit < 2:
        return PrimeTable(limit=limit, primes=np.empty(0, np.int64),
                          logp=np.empty(0))

    # small base sieve up to sqrt(limit), used to strike every segment
    root = int(math.isqrt(limit))
    base = np.ones(root + 1, bool)
    base[:2] = False
    for q in range(2, int(math.isqrt(root)) + 1):
        if base[q]:
            base[q * q:: q] = False
    base_primes = np.nonzero(base)[0].astype(np.int64)
    odd_base = base_primes[base_primes > 2]

    chunks = []
    if limit >= 2:
        chunks.append(np.array([2], np.int64))
    # odd numbers only: segment over value ranges [lo, hi)
    lo = 3
    while lo <= limit:
        hi = min(lo + segment_size, limit + 1)
        n = (hi - lo + 1) // 2  # odds in [lo, hi)
        comp = np.zeros(n, bool)
        for q in odd_base:
            q = int(q)
            start = max(q * q, ((lo + q - 1) // q) * q)
            if start % 2 == 0:
                start += q
            if start >= hi:
                continue
            comp[(start - lo) // 2:: q] = True
        vals = lo + 2 * np.nonzero(~comp)[0]
        chunks.append(vals.astype(np.int64))
        lo = hi + (1 - hi % 2)  # next odd start
    primes = np.concatenate(chunks)
    primes = primes[primes <= limit]
    return PrimeTable(limit=limit, primes=primes, logp=_refined_log(primes))


def _refined_log(primes: np.ndarray) -> np.ndarray:
    """log p with one Newton correction, ~2e-16 absolute instead of 1 ulp."""
    if primes.size == 0:
        return np.empty(0)
    pf = primes.astype(np.float64)
    y = np.log(pf)
    r = pf * np.exp(-y) - 1.0
    return y + (r - 0.5 * r * r)


@dataclass
class PrimeTable:
    """Sieved primes <= limit with cached logarithms and scale buckets.

    Immutable after construction; shared freely across worker processes.
    """

    limit: int
    primes: np.ndarray
    logp: np.ndarray
    bucket_starts: np.ndarray = field(init=False)

    def __post_init__(self):
        self.primes.setflags(write=False)
        self.logp.setflags(write=False)
        nb = 0 if self.logp.size == 0 else max(0, math.ceil(math.log(self.logp[-1]))) + 1
        # bucket j covers logp in (e^(j-1), e^j]; starts[j] = first index of bucket j
        edges = np.exp(np.arange(nb) - 1.0) if nb else np.empty(0)
        if nb:
            edges[0] = 1.0  # bucket 0 is logp <= 1
            starts = np.searchsorted(self.logp, edges, side="right")
            starts[0] = 0
        else:
            starts = np.empty(0, np.int64)
        self.bucket_starts = np.append(starts, self.primes.size).astype(np.int64)
        self.bucket_starts.setflags(write=False)

    def __len__(self) -> int:
        return int(self.primes.size)

    @property
    def n_buckets(self) -> int:
        return len(self.bucket_starts) - 1

    def bucket(self, j: int) -> tuple[int, int]:
        """Index range [start, stop) of scale bucket j."""
        if not 0 <= j < self.n_buckets:
            raise IndexError(f"bucket {j} out of range")
        return int(self.bucket_starts[j]), int(self.bucket_starts[j + 1])

    @property
    def max_scale(self) -> float:
        """Largest k fully covered: log log limit."""
        if self.limit < 2:
            return -math.inf
        return math.log(math.log(self.limit))

    def covers_scale(self, k: float) -> bool:
        return self.limit >= 2 and (math.isinf(k) and k < 0 or k <= self.max_scale)

    def cut_index(self, k: float) -> int:
        """Number of primes with log p <= e^k."""
        if math.isinf(k) and k < 0:
            return 0
        if k > 700.0:  # exp would overflow; everything is below e^k
            return int(self.primes.size)
        return int(np.searchsorted(self.logp, math.exp(k), side="right"))

    # -- binary cache -------------------------------------------------------

    def save_cache(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(_CACHE_MAGIC)
            fh.write(struct.pack("<IQQ", _CACHE_VERSION, self.limit, len(self)))
            fh.write(self.primes.astype("<u8").tobytes())

    @classmethod
    def load_cache(cls, path) -> "PrimeTable":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != _CACHE_MAGIC:
                raise ValueError(f"bad prime cache magic {magic!r}")
            version, limit, count = struct.unpack("<IQQ", fh.read(20))
            if version != _CACHE_VERSION:
                raise ValueError(f"unsupported prime cache version {version}")
            primes = np.frombuffer(fh.read(8 * count), dtype="<u8").astype(np.int64)
            if len(primes) != count:
                raise ValueError("truncated prime cache")
        return cls(limit=limit, primes=primes, logp=_refined_log(primes))


@dataclass
class ScaleSlice:
    """Primes in one scale window, plus whether the sieve cut it short."""

    primes: np.ndarray
    logp: np.ndarray
    truncated: bool

    def __iter__(self):
        return iter(zip(self.primes.tolist(), self.logp.tolist()))


def primes_in_scale(table: PrimeTable, k_lo: float, k_hi: float) -> ScaleSlice:
    """Primes with e^{k_lo} < log p <= e^{k_hi}, ascending.

    k_lo = -inf selects from the first prime.  If exp(e^{k_hi}) exceeds the
    sieve limit the result is truncated and flagged.
    """
    if not k_lo < k_hi:
        raise ValueError(f"need k_lo < k_hi, got {k_lo} >= {k_hi}")
    i0 = table.cut_index(k_lo)
    i1 = table.cut_index(k_hi)
    truncated = not table.covers_scale(k_hi)
    return ScaleSlice(table.primes[i0:i1], table.logp[i0:i1], truncated)


def mertens_sum(table: PrimeTable, k: float, allow_truncation: bool = True) -> float:
    """Sum of 1/p over log p <= e^k (compare log log + Mertens constant)."""
    if not allow_truncation and not table.covers_scale(k):
        raise TruncationError(
            f"mertens_sum at k={k} needs limit >= exp(e^k) > {table.limit}")
    cut = table.cut_index(k)
    if cut == 0:
        return 0.0
    return float(np.sum(1.0 / table.primes[:cut]))
