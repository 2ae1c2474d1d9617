"""Finite-element matrices on triangular meshes.

Assembles the two matrices every precision construction needs, using
piecewise-linear (hat) basis functions:

* ``C``: lumped mass matrix, diagonal with C_ii = integral of basis i, i.e.
  one third of the total area of the triangles incident to vertex i;
* ``G``: stiffness matrix, G_ij = integral of grad(psi_i) . grad(psi_j).

The lumping makes C trivially invertible, which keeps all precision products
sparse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import AssemblyError
from .mesh import Mesh


@dataclass(frozen=True)
class FemMatrices:
    """Lumped mass diagonal and stiffness matrix of a mesh."""

    c_diag: np.ndarray
    G: sp.csc_matrix

    @property
    def n(self) -> int:
        return self.c_diag.shape[0]

    @property
    def C(self) -> sp.csc_matrix:
        """Lumped mass matrix as a sparse diagonal matrix."""
        return sp.diags(self.c_diag, format="csc")

    @property
    def c_inv(self) -> np.ndarray:
        return 1.0 / self.c_diag


def assemble(mesh: Mesh) -> FemMatrices:
    """Assemble mass and stiffness matrices for piecewise-linear elements.

    Raises:
        AssemblyError: if any triangle is degenerate (non-positive area).
    """
    p = mesh.vertices
    t = mesh.triangles
    n = mesh.num_vertices

    x = p[:, 0][t]  # (M, 3)
    y = p[:, 1][t]
    # area2 = twice the signed area; CCW orientation makes it positive
    area2 = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (
        y[:, 1] - y[:, 0]
    )
    span = max(np.ptp(p[:, 0]), np.ptp(p[:, 1]), 1.0)
    tiny = 1e-14 * span * span
    if np.any(area2 <= tiny):
        bad = int(np.argmax(area2 <= tiny))
        raise AssemblyError(
            f"triangle {bad} with vertices {t[bad].tolist()} is degenerate "
            f"(twice-area {area2[bad]:.3e})"
        )
    area = 0.5 * area2

    c_diag = np.bincount(
        t.ravel(), weights=np.repeat(area / 3.0, 3), minlength=n
    ).astype(np.float64)

    # gradients of the barycentric functions: grad(lambda_a) = (b_a, c_a) / area2
    b = np.stack([y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]], axis=1)
    c = np.stack([x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]], axis=1)
    local = (
        b[:, :, None] * b[:, None, :] + c[:, :, None] * c[:, None, :]
    ) / (2.0 * area2)[:, None, None]

    rows = t[:, np.repeat(np.arange(3), 3)].ravel()
    cols = t[:, np.tile(np.arange(3), 3)].ravel()
    G = sp.coo_matrix((local.reshape(-1), (rows, cols)), shape=(n, n)).tocsc()
    # (a + a) / 2 == a in floating point, so this only repairs asymmetric
    # rounding from duplicate summation order, never perturbs a symmetric G
    G = ((G + G.T) * 0.5).tocsc()
    G.sum_duplicates()
    G.sort_indices()
    return FemMatrices(c_diag=c_diag, G=G)


def write_matrix_market(path, matrix) -> None:
    """Export a (sparse or diagonal) matrix in Matrix Market format."""
    from scipy.io import mmwrite

    from .util import atomic_write

    m = sp.coo_matrix(matrix)
    with atomic_write(path, "wb") as fh:
        mmwrite(fh, m)
