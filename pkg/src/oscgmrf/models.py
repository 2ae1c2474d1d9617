"""Model specifications for triangular two-field systems.

A bivariate field x = (x1, x2) is defined through a lower-triangular system
of stochastic operator equations

    L11 x1           = eps1
    L21 x1 + L22 x2  = eps2

where each L is either b * (h - Laplacian) (second-order, ``alpha = 2``) or a
plain multiple of the identity b (``alpha = 0``), and each driving noise
eps_i is white, a second-order Matern field, or an oscillating field with
frequency parameter omega in [0, 1).  Three operator variants are supported:

* ``L1``: L11 = b11 (h11 - D), L21 = b21, L22 = b22 (h22 - D)
* ``L2``: like L1 but L21 = b21 (h21 - D)
* ``L3``: like L1 but L22 = b22  (first order in x2's own equation)

with D denoting the Laplacian.  The first field never depends on the second,
so its marginal distribution is governed by b11, h11 and noise 1 alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import InvalidInputError

NOISE_KINDS = ("white", "matern", "oscillating")
VARIANTS = ("L1", "L2", "L3")

FIELD_NON_OSCILLATING = "non-oscillating"
FIELD_OSCILLATING = "oscillating"
FIELD_POSSIBLY_OSCILLATING = "possibly-oscillating"


@dataclass(frozen=True)
class NoiseSpec:
    """Driving noise of one equation.

    ``kappa_sq_exact`` optionally pins the squared range parameter to an
    exact value (used by the identifiability lock, which ties kappa_n^2 of
    noise 1 to h11 without a lossy sqrt/square round trip).  All formulas
    read :attr:`kappa_sq`.
    """

    kind: str
    kappa_n: float = 0.0
    omega: float = 0.0
    kappa_sq_exact: float | None = None

    def validate(self) -> None:
        if self.kind not in NOISE_KINDS:
            raise InvalidInputError(
                f"noise kind {self.kind!r} not one of {NOISE_KINDS}"
            )
        if self.kind != "white":
            if not (self.kappa_sq > 0.0 and math.isfinite(self.kappa_sq)):
                raise InvalidInputError(
                    f"{self.kind} noise needs kappa_n > 0, got kappa_n^2 = {self.kappa_sq!r}"
                )
        if self.kind == "oscillating":
            if not (0.0 <= self.omega < 1.0):
                raise InvalidInputError(
                    f"oscillating noise needs omega in [0, 1), got {self.omega!r}"
                )

    @property
    def kappa_sq(self) -> float:
        if self.kappa_sq_exact is not None:
            return self.kappa_sq_exact
        return self.kappa_n * self.kappa_n


@dataclass(frozen=True)
class OperatorSpec:
    """Coefficients of the lower-triangular operator matrix."""

    variant: str = "L1"
    b11: float = 1.0
    b21: float = 0.0
    b22: float = 1.0
    h11: float = 1.0
    h22: float = 1.0
    h21: float = 0.0  # only read for variant L2

    def validate(self) -> None:
        if self.variant not in VARIANTS:
            raise InvalidInputError(f"variant {self.variant!r} not one of {VARIANTS}")
        for name in ("b11", "b22", "h11", "h22"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise InvalidInputError(f"{name} must be positive, got {v!r}")
        if not math.isfinite(self.b21):
            raise InvalidInputError(f"b21 must be finite, got {self.b21!r}")
        if self.variant == "L2" and not (self.h21 > 0.0 and math.isfinite(self.h21)):
            raise InvalidInputError(f"variant L2 needs h21 > 0, got {self.h21!r}")


@dataclass(frozen=True)
class ModelSpec:
    """Complete hyperparameter set of a bivariate model.

    When ``lock1`` is on and noise 1 is a Matern field, kappa_n1^2 is tied to
    h11 exactly (the two are not separately identifiable because the operator
    factors commute); kappa_n1 then drops out of the free parameters.
    ``lock2`` does the same for noise 2 and h22.
    """

    operator: OperatorSpec = field(default_factory=OperatorSpec)
    noise1: NoiseSpec = field(default_factory=lambda: NoiseSpec("white"))
    noise2: NoiseSpec = field(default_factory=lambda: NoiseSpec("white"))
    lock1: bool = True
    lock2: bool = False

    def validate(self) -> None:
        self.operator.validate()
        self.effective_noise1.validate()
        self.effective_noise2.validate()

    @property
    def effective_noise1(self) -> NoiseSpec:
        if self.lock1 and self.noise1.kind == "matern":
            return replace(
                self.noise1,
                kappa_n=math.sqrt(self.operator.h11),
                kappa_sq_exact=self.operator.h11,
            )
        return self.noise1

    @property
    def effective_noise2(self) -> NoiseSpec:
        if self.lock2 and self.noise2.kind == "matern":
            return replace(
                self.noise2,
                kappa_n=math.sqrt(self.operator.h22),
                kappa_sq_exact=self.operator.h22,
            )
        return self.noise2


def classify_fields(model: ModelSpec) -> tuple[str, str]:
    """Qualitative covariance class of each field.

    A field driven by oscillating noise has oscillating covariance; fields
    further down the triangular system inherit that noise through the
    coupling and are only *possibly* oscillating; fields above it, and all
    fields when no noise oscillates, are non-oscillating.
    """
    kinds = (model.noise1.kind, model.noise2.kind)
    tags = []
    for j, kind in enumerate(kinds):
        if kind == "oscillating":
            tags.append(FIELD_OSCILLATING)
        elif any(k == "oscillating" for k in kinds[:j]):
            tags.append(FIELD_POSSIBLY_OSCILLATING)
        else:
            tags.append(FIELD_NON_OSCILLATING)
    return tuple(tags)
