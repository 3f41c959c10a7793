"""mesozeta: Monte Carlo laboratory for extreme values of zeta and its
prime-sum walk surrogates on mesoscopic windows of the critical line."""

import os as _os

# Pin the numba threading layer to the fork-safe workqueue backend and fix
# the BLAS thread count before numpy/numba load: worker processes must see
# the same threading as the parent for bit-identical reductions.
_os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")
_os.environ.setdefault("OMP_NUM_THREADS", "2")
_os.environ.setdefault("OPENBLAS_NUM_THREADS", "2")

from . import barriers, dirichlet, experiments, models, mollifier, primes, zeta  # noqa: E402,F401

__version__ = "0.1.0"
