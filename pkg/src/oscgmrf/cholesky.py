"""Sparse Cholesky factorization with a symbolic/numeric split.

Wraps the low-level kernels into an analyze-once / factorize-many workflow:
the symbolic phase computes a fill-reducing permutation, the elimination tree
and the column pointers of the factor, plus an index map that re-permutes the
matrix values in O(nnz) on every refactorization.  Intended use is repeated
factorization of matrices with a fixed sparsity pattern and changing values,
as happens when hyperparameters move during optimization.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import kernels
from .errors import InvalidInputError, NotSPDError

ORDERINGS = ("mindeg", "rcm", "natural")


def _compute_permutation(pattern: sp.csc_matrix, ordering: str) -> np.ndarray:
    n = pattern.shape[0]
    if ordering == "natural":
        return np.arange(n, dtype=np.int64)
    if ordering == "rcm":
        from scipy.sparse.csgraph import reverse_cuthill_mckee

        return reverse_cuthill_mckee(pattern.tocsr(), symmetric_mode=True).astype(np.int64)
    if ordering == "mindeg":
        return kernels.min_degree_order(
            n, pattern.indptr.astype(np.int64), pattern.indices.astype(np.int64)
        )
    raise InvalidInputError(f"unknown ordering {ordering!r}; expected one of {ORDERINGS}")


class CholeskyFactor:
    """Numeric factor P Q P^T = L L^T for a sparse SPD matrix Q."""

    def __init__(self, symbolic: "SymbolicFactor", Lx: np.ndarray):
        self._sym = symbolic
        self.n = symbolic.n
        self.perm = symbolic.perm
        self.Lp = symbolic.Lp
        self.Li = symbolic.Li
        self.Lx = Lx

    @property
    def factor_nnz(self) -> int:
        return int(self.Lp[-1])

    def logdet(self) -> float:
        """log det Q = 2 * sum(log diag L)."""
        return 2.0 * float(np.sum(np.log(self.Lx[self.Lp[:-1]])))

    def _as_matrix(self, b: np.ndarray) -> tuple[np.ndarray, bool]:
        b = np.asarray(b, dtype=np.float64)
        if b.ndim == 1:
            return b.reshape(-1, 1), True
        if b.ndim == 2:
            return b, False
        raise InvalidInputError("right-hand side must be 1- or 2-dimensional")

    def solve(self, b: np.ndarray) -> np.ndarray:
        """Solve Q x = b for one (n,) or many (n, m) right-hand sides."""
        B, squeeze = self._as_matrix(b)
        if B.shape[0] != self.n:
            raise InvalidInputError(
                f"right-hand side has {B.shape[0]} rows, matrix order is {self.n}"
            )
        Y = np.ascontiguousarray(B[self.perm])
        kernels.lsolve_multi(self.Lp, self.Li, self.Lx, Y)
        kernels.ltsolve_multi(self.Lp, self.Li, self.Lx, Y)
        out = np.empty_like(Y)
        out[self.perm] = Y
        return out[:, 0] if squeeze else out

    def sample_transform(self, z: np.ndarray) -> np.ndarray:
        """Map iid standard normals z to draws with covariance Q^{-1}.

        Computes P^T L^{-T} z; input is (n,) or (n, m), one draw per column.
        """
        Z, squeeze = self._as_matrix(z)
        if Z.shape[0] != self.n:
            raise InvalidInputError(
                f"input has {Z.shape[0]} rows, matrix order is {self.n}"
            )
        Y = np.ascontiguousarray(Z.copy())
        kernels.ltsolve_multi(self.Lp, self.Li, self.Lx, Y)
        out = np.empty_like(Y)
        out[self.perm] = Y
        return out[:, 0] if squeeze else out

    def invquad_columns(self, V: np.ndarray) -> np.ndarray:
        """Quadratic forms v^T Q^{-1} v for each column v of dense V (n, m)."""
        W, _ = self._as_matrix(V)
        if W.shape[0] != self.n:
            raise InvalidInputError(
                f"input has {W.shape[0]} rows, matrix order is {self.n}"
            )
        Y = np.ascontiguousarray(W[self.perm])
        kernels.lsolve_multi(self.Lp, self.Li, self.Lx, Y)
        return np.einsum("ij,ij->j", Y, Y)

    def marginal_variance(self, indices: np.ndarray) -> np.ndarray:
        """Diagonal entries (Q^{-1})_{vv} for the requested indices.

        One forward solve per index: (Q^{-1})_{vv} = ||L^{-1} P e_v||^2.
        """
        idx = np.atleast_1d(np.asarray(indices, dtype=np.int64))
        inv_positions = np.empty(self.n, dtype=np.int64)
        inv_positions[self.perm] = np.arange(self.n, dtype=np.int64)
        E = np.zeros((self.n, idx.shape[0]), dtype=np.float64)
        E[inv_positions[idx], np.arange(idx.shape[0])] = 1.0
        kernels.lsolve_multi(self.Lp, self.Li, self.Lx, E)
        return np.einsum("ij,ij->j", E, E)


class SymbolicFactor:
    """Reusable symbolic analysis of a sparse SPD pattern."""

    def __init__(self, Q: sp.spmatrix, ordering: str = "mindeg"):
        A = sp.csc_matrix(Q)
        if A.shape[0] != A.shape[1]:
            raise InvalidInputError("matrix must be square")
        A.sum_duplicates()
        A.sort_indices()
        self.n = A.shape[0]
        self.ordering = ordering
        self.perm = _compute_permutation(A, ordering)
        if not np.array_equal(np.sort(self.perm), np.arange(self.n)):
            raise AssertionError("ordering kernel returned an invalid permutation")

        # canonical pattern of Q, kept to validate refactorization inputs
        self._qp = A.indptr.copy()
        self._qi = A.indices.copy()

        # permuted pattern C = Q[perm][:, perm] and gather map Q.data -> C.data;
        # entry values 1..nnz survive the fancy indexing (zeros would be pruned)
        nnz = A.nnz
        tracer = sp.csc_matrix(
            (np.arange(1, nnz + 1, dtype=np.float64), A.indices, A.indptr),
            shape=A.shape,
        )
        C = tracer.tocsr()[self.perm].tocsc()[:, self.perm].tocsc()
        C.sort_indices()
        self._data_map = (C.data - 1.0).astype(np.int64)
        self._cp = C.indptr.astype(np.int64)
        self._ci = C.indices.astype(np.int64)

        self.parent = kernels.etree(self.n, self._cp, self._ci)
        counts = kernels.col_counts(self.n, self._cp, self._ci, self.parent)
        self.Lp = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(counts, out=self.Lp[1:])
        self.Li = np.empty(int(self.Lp[-1]), dtype=np.int64)

    @property
    def factor_nnz(self) -> int:
        return int(self.Lp[-1])

    def matches(self, Q: sp.csc_matrix) -> bool:
        """True if Q has exactly the pattern this analysis was built for."""
        return (
            sp.issparse(Q)
            and Q.format == "csc"
            and Q.nnz == self._qi.shape[0]
            and np.array_equal(Q.indptr, self._qp)
            and np.array_equal(Q.indices, self._qi)
        )

    def factorize(self, Q: sp.spmatrix) -> CholeskyFactor:
        """Numeric factorization of a matrix with the analyzed pattern."""
        A = Q if (sp.issparse(Q) and Q.format == "csc") else sp.csc_matrix(Q)
        if not self.matches(A):
            raise InvalidInputError(
                "matrix pattern differs from the symbolic analysis; rebuild it"
            )
        Cx = A.data[self._data_map]
        Lx = np.empty(self.Li.shape[0], dtype=np.float64)
        status = kernels.chol_numeric(
            self.n, self._cp, self._ci, Cx, self.parent, self.Lp, self.Li, Lx
        )
        if status != 0:
            raise NotSPDError(
                f"matrix is not positive definite (leading minor of order {status})"
            )
        return CholeskyFactor(self, Lx)


def cholesky_factor(Q: sp.spmatrix, ordering: str = "mindeg") -> CholeskyFactor:
    """One-shot analyze + factorize."""
    return SymbolicFactor(Q, ordering=ordering).factorize(sp.csc_matrix(Q))
