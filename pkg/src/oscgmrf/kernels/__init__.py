"""Backend selection for the sparse numerical kernels.

By default the numba-compiled kernels are used.  Setting the environment
variable ``OSCGMRF_NO_NUMBA`` to ``1``/``true``/``yes``/``on`` (checked at
import time), or running without numba installed, selects the pure-numpy
reference implementations from :mod:`oscgmrf.kernels.ref` instead.  Both
backends produce bit-identical results; the compiled one is just faster (see
``benchmarks/bench_cholesky.py``).
"""

import os

from . import ref


def _numba_disabled() -> bool:
    value = os.environ.get("OSCGMRF_NO_NUMBA", "").strip().lower()
    return value in {"1", "true", "yes", "on"}


USING_NUMBA = False
if not _numba_disabled():
    try:
        from . import jitted as _impl

        USING_NUMBA = True
    except ImportError:
        _impl = ref
else:
    _impl = ref

BACKEND = "numba" if USING_NUMBA else "numpy"

etree = _impl.etree
col_counts = _impl.col_counts
chol_numeric = _impl.chol_numeric
min_degree_order = _impl.min_degree_order
lsolve_multi = _impl.lsolve_multi
ltsolve_multi = _impl.ltsolve_multi

__all__ = [
    "BACKEND",
    "USING_NUMBA",
    "chol_numeric",
    "col_counts",
    "etree",
    "lsolve_multi",
    "ltsolve_multi",
    "min_degree_order",
    "ref",
]
