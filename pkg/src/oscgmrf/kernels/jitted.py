"""Numba-compiled variants of the sparse kernels.

The sequential routines (ordering, symbolic analysis, numeric factorization)
are the exact code objects from :mod:`oscgmrf.kernels.ref`, jit-compiled.  The
multi right-hand-side triangular solves get dedicated explicit-loop bodies:
the reference versions lean on vectorized row operations (fast under plain
numpy), while under numba tight scalar loops avoid per-row temporaries.  Both
variants perform the identical floating-point operation sequence, so results
agree bit for bit across backends.

Importing this module requires numba; ``oscgmrf.kernels`` falls back to the
reference module when numba is unavailable or disabled via the
``OSCGMRF_NO_NUMBA`` environment variable.
"""

from numba import njit

from . import ref as _ref

_jit = njit(cache=True, nogil=True)

etree = _jit(_ref.etree)
col_counts = _jit(_ref.col_counts)
chol_numeric = _jit(_ref.chol_numeric)
min_degree_order = _jit(_ref.min_degree_order)


@njit(cache=True, nogil=True)
def lsolve_multi(Lp, Li, Lx, B):
    """Solve L X = B in place for a CSC lower-triangular L; B is (n, m)."""
    n = Lp.shape[0] - 1
    m = B.shape[1]
    for j in range(n):
        p0 = Lp[j]
        d = Lx[p0]
        for t in range(m):
            B[j, t] /= d
        for p in range(p0 + 1, Lp[j + 1]):
            l = Lx[p]
            i = Li[p]
            for t in range(m):
                B[i, t] -= l * B[j, t]


@njit(cache=True, nogil=True)
def ltsolve_multi(Lp, Li, Lx, B):
    """Solve L^T X = B in place for a CSC lower-triangular L; B is (n, m)."""
    n = Lp.shape[0] - 1
    m = B.shape[1]
    for j in range(n - 1, -1, -1):
        p0 = Lp[j]
        for p in range(p0 + 1, Lp[j + 1]):
            l = Lx[p]
            i = Li[p]
            for t in range(m):
                B[j, t] -= l * B[i, t]
        d = Lx[p0]
        for t in range(m):
            B[j, t] /= d
