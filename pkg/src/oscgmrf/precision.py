"""Sparse precision matrices for triangular two-field systems.

The finite-element discretization turns each operator equation into a linear
relation K w = C e between the basis weights w of the fields and the weights
e of the driving noises (C is the lumped mass matrix).  With Q_eps the block
precision of the noise weights, the joint precision of the field weights is

    Q = (C~^{-1} K)^T  blockdiag(Q_eps1, Q_eps2)  (C~^{-1} K),

where C~ = blockdiag(C, C).  Because C is diagonal all products stay sparse.
The result is symmetrized entry by entry after assembly to remove duplicate
round-off from the sparse products.

Noise weight precisions:

* white:        Q_eps = C
* matern:       Q_eps = (kappa^2 C + G) C^{-1} (kappa^2 C + G)
* oscillating:  Q_eps = kappa^4 C + 2 cos(pi omega) kappa^2 G + G C^{-1} G

The oscillating form interpolates between the Matern case (omega = 0, where
it factors exactly into the sandwich above because C is diagonal) and a
process concentrating spectral mass on the ring |k| = kappa as omega -> 1;
it is positive definite for every omega in [0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .cholesky import CholeskyFactor, SymbolicFactor
from .errors import InvalidInputError, NotSPDError
from .fem import FemMatrices
from .models import ModelSpec, NoiseSpec

__all__ = [
    "Gmrf",
    "SystemLogdet",
    "noise_precision",
    "operator_block",
    "system_operator",
    "system_precision",
]


def _symmetrize(A: sp.spmatrix) -> sp.csc_matrix:
    S = ((A + A.T) * 0.5).tocsc()
    S.sum_duplicates()
    S.sort_indices()
    return S


def noise_precision(fem: FemMatrices, noise: NoiseSpec) -> sp.csc_matrix:
    """Precision matrix of the FEM weights of one driving noise field."""
    noise.validate()
    C = fem.C
    G = fem.G
    if noise.kind == "white":
        return C.tocsc()
    k2 = noise.kappa_sq
    if noise.kind == "matern":
        A = (k2 * C + G).tocsc()
        # A C^{-1} A with diagonal C: scale columns of the left factor
        Q = (A.multiply(fem.c_inv[None, :])) @ A
        return _symmetrize(Q)
    # oscillating
    GCG = (G.multiply(fem.c_inv[None, :])) @ G
    Q = (k2 * k2) * C + (2.0 * math.cos(math.pi * noise.omega) * k2) * G + GCG
    return _symmetrize(Q)


def operator_block(fem: FemMatrices, b: float, h: float, alpha: int) -> sp.csc_matrix:
    """Discretization of one operator: b (h - Laplacian) or plain b.

    ``alpha = 2`` yields b (h C + G); ``alpha = 0`` yields b C (the operator
    acts as multiplication, so it hits the mass matrix only).
    """
    if alpha == 2:
        return (b * (h * fem.C + fem.G)).tocsc()
    if alpha == 0:
        return (b * fem.C).tocsc()
    raise InvalidInputError(f"operator order alpha must be 0 or 2, got {alpha!r}")


def system_operator(fem: FemMatrices, model: ModelSpec) -> sp.csc_matrix:
    """Block matrix K of the discretized system K w = C~ e."""
    op = model.operator
    K11 = operator_block(fem, op.b11, op.h11, 2)
    K22 = (
        operator_block(fem, op.b22, op.h22, 2)
        if op.variant in ("L1", "L2")
        else operator_block(fem, op.b22, 0.0, 0)
    )
    K21 = (
        operator_block(fem, op.b21, op.h21, 2)
        if op.variant == "L2"
        else operator_block(fem, op.b21, 0.0, 0)
    )
    return sp.bmat([[K11, None], [K21, K22]], format="csc")


@dataclass
class Gmrf:
    """A Gaussian field with sparse precision Q (zero mean).

    Caches one Cholesky factorization per ordering; `factor` raises
    NotSPDError annotated with the model parameters when Q is not positive
    definite.
    """

    Q: sp.csc_matrix
    model: Optional[ModelSpec] = None
    _factors: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def size(self) -> int:
        return self.Q.shape[0]

    @property
    def n_per_field(self) -> int:
        return self.Q.shape[0] // 2

    def factor(self, ordering: str = "mindeg") -> CholeskyFactor:
        if ordering not in self._factors:
            try:
                sym = SymbolicFactor(self.Q, ordering=ordering)
                self._factors[ordering] = sym.factorize(self.Q)
            except NotSPDError as exc:
                detail = f"; model: {self.model}" if self.model is not None else ""
                raise NotSPDError(f"{exc}{detail}") from exc
        return self._factors[ordering]

    def logdet(self, ordering: str = "mindeg") -> float:
        return self.factor(ordering).logdet()


class SystemLogdet:
    """log|Q| of the joint precision, evaluated from its building blocks.

    Q = B^T Q_eps B with B = C~^{-1} K and K block lower triangular, so

        log|Q| = 2 log|K11| + 2 log|K22| - 4 sum(log c) + log|Qe1| + log|Qe2|

    and every determinant on the right comes from a factorization of an
    n x n one- or two-hop matrix instead of the 2n x 2n system.  That makes
    repeated evaluation (e.g. inside an optimizer) much cheaper than
    factoring Q itself.  Symbolic analyses are cached per sparsity pattern.
    """

    def __init__(self, fem: FemMatrices, ordering: str = "mindeg") -> None:
        self.fem = fem
        self.ordering = ordering
        self._sum_log_c = float(np.sum(np.log(fem.c_diag)))
        self._symbolic: dict = {}

    def _logdet_spd(self, key: str, M: sp.csc_matrix) -> float:
        sym = self._symbolic.get(key)
        if sym is None or not sym.matches(M):
            sym = SymbolicFactor(M, ordering=self.ordering)
            self._symbolic[key] = sym
        return sym.factorize(M).logdet()

    def _logdet_shifted(self, h: float) -> float:
        # h C + G shares the stiffness pattern for every h > 0, so one
        # symbolic analysis covers all shifts that come through here.
        M = (h * self.fem.C + self.fem.G).tocsc()
        M.sum_duplicates()
        M.sort_indices()
        return self._logdet_spd("onehop", M)

    def _logdet_noise(self, noise: NoiseSpec) -> float:
        if noise.kind == "white":
            return self._sum_log_c
        if noise.kind == "matern":
            # (k2 C + G) C^{-1} (k2 C + G) with diagonal C
            return 2.0 * self._logdet_shifted(noise.kappa_sq) - self._sum_log_c
        return self._logdet_spd("twohop", noise_precision(self.fem, noise))

    def __call__(self, model: ModelSpec) -> float:
        model.validate()
        op = model.operator
        n = self.fem.c_diag.size
        value = -4.0 * self._sum_log_c
        value += 2.0 * (n * math.log(op.b11) + self._logdet_shifted(op.h11))
        if op.variant in ("L1", "L2"):
            value += 2.0 * (n * math.log(op.b22) + self._logdet_shifted(op.h22))
        else:
            value += 2.0 * (n * math.log(op.b22) + self._sum_log_c)
        value += self._logdet_noise(model.effective_noise1)
        value += self._logdet_noise(model.effective_noise2)
        return value


def system_precision(fem: FemMatrices, model: ModelSpec) -> Gmrf:
    """Joint precision of the two fields' FEM weights.

    The off-diagonal coupling enters only through the second equation; with
    b21 = 0 the result is exactly block-diagonal (the zero blocks are exact,
    not just small).
    """
    model.validate()
    K = system_operator(fem, model)
    Qe = sp.block_diag(
        (
            noise_precision(fem, model.effective_noise1),
            noise_precision(fem, model.effective_noise2),
        ),
        format="csc",
    )
    cinv2 = np.concatenate([fem.c_inv, fem.c_inv])
    B = K.multiply(cinv2[:, None]).tocsc()  # C~^{-1} K (row scaling)
    Q = (B.T @ Qe) @ B
    return Gmrf(Q=_symmetrize(Q), model=model)
