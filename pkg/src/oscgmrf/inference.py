"""Hyperparameter inference and spatial prediction.

The hyperparameters theta of a model are estimated by maximizing the
marginal posterior obtained after integrating the latent field out of the
Gaussian hierarchy.  Dropping additive constants (powers of 2 pi and the
fixed observation-noise determinant), with Q(theta) the field precision,
Q_c = Q + A^T Q_n A the conditional precision and mu_c = Q_c^{-1} A^T Q_n y:

    log pi(theta | y) = log pi(theta) + 1/2 log det Q
                        - 1/2 log det Q_c + 1/2 mu_c^T Q_c mu_c

where mu_c^T Q_c mu_c is evaluated as mu_c . (A^T Q_n y).  Optimization runs
over unconstrained transforms of theta (log for positive parameters, logit
for omega, identity for the coupling b21), maximizing the same posterior, so
the reported mode is the natural-scale mode.  Gradients are central finite
differences; standard errors come from the delta method applied to the
inverse of a central-difference Hessian at the mode.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from .errors import InvalidInputError, NotSPDError
from .fem import FemMatrices
from .models import ModelSpec, NoiseSpec
from .observations import ObservationSet
from .precision import SystemLogdet, _symmetrize, system_precision

logger = logging.getLogger(__name__)

PRIOR_FAMILIES = ("lognormal", "normal", "beta", "flat")


@dataclass(frozen=True)
class Prior:
    """One-dimensional prior density.

    Families: ``lognormal(mu, sigma_sq)`` (density of log x normal),
    ``normal(mu, sigma_sq)``, ``beta(a, b)`` on (0, 1) and improper ``flat``.
    """

    family: str
    a: float = 0.0
    b: float = 1.0

    def validate(self) -> None:
        if self.family not in PRIOR_FAMILIES:
            raise InvalidInputError(
                f"prior family {self.family!r} not one of {PRIOR_FAMILIES}"
            )
        if self.family in ("lognormal", "normal") and not self.b > 0:
            raise InvalidInputError(f"{self.family} prior needs variance > 0, got {self.b!r}")
        if self.family == "beta" and not (self.a > 0 and self.b > 0):
            raise InvalidInputError(
                f"beta prior needs positive shapes, got ({self.a!r}, {self.b!r})"
            )

    def log_density(self, x: float) -> float:
        if self.family == "flat":
            return 0.0
        if self.family == "lognormal":
            if x <= 0:
                return -math.inf
            lx = math.log(x)
            return (
                -lx
                - 0.5 * (lx - self.a) ** 2 / self.b
                - 0.5 * math.log(2.0 * math.pi * self.b)
            )
        if self.family == "normal":
            return -0.5 * (x - self.a) ** 2 / self.b - 0.5 * math.log(
                2.0 * math.pi * self.b
            )
        # beta
        if not 0.0 < x < 1.0:
            return -math.inf
        from scipy.special import betaln

        return (
            (self.a - 1.0) * math.log(x)
            + (self.b - 1.0) * math.log1p(-x)
            - betaln(self.a, self.b)
        )

    def sample(self, gen: np.random.Generator) -> float:
        if self.family == "lognormal":
            return float(np.exp(self.a + math.sqrt(self.b) * gen.standard_normal()))
        if self.family == "normal":
            return float(self.a + math.sqrt(self.b) * gen.standard_normal())
        if self.family == "beta":
            return float(gen.beta(self.a, self.b))
        raise InvalidInputError("cannot sample from an improper flat prior")


_DEFAULT_DIFFUSE = {
    "b11": Prior("lognormal", 0.0, 100.0),
    "b21": Prior("normal", 0.0, 100.0),
    "b22": Prior("lognormal", 0.0, 100.0),
    "h11": Prior("lognormal", 0.0, 100.0),
    "h21": Prior("lognormal", 0.0, 100.0),
    "h22": Prior("lognormal", 0.0, 100.0),
    "kappa_n1": Prior("lognormal", 0.0, 100.0),
    "kappa_n2": Prior("lognormal", 0.0, 100.0),
    "omega1": Prior("beta", 1.0, 1.0),
    "omega2": Prior("beta", 1.0, 1.0),
}


PARAMETER_NAMES = tuple(_DEFAULT_DIFFUSE)


@dataclass(frozen=True)
class PriorSpec:
    """Priors per parameter name; unspecified names fall back to defaults.

    Defaults are weakly informative: log-normal(0, 100) on positive
    parameters, normal(0, 100) on b21 and uniform beta(1, 1) on omega.
    """

    overrides: dict = field(default_factory=dict)

    def get(self, name: str) -> Prior:
        base = name if name in _DEFAULT_DIFFUSE else None
        if base is None:
            raise InvalidInputError(f"no prior defined for parameter {name!r}")
        return self.overrides.get(name, _DEFAULT_DIFFUSE[name])

    def log_density(self, name: str, value: float) -> float:
        return self.get(name).log_density(value)

    def with_overrides(self, **priors: Prior) -> "PriorSpec":
        merged = dict(self.overrides)
        merged.update(priors)
        for p in merged.values():
            p.validate()
        return PriorSpec(overrides=merged)


# ----------------------------------------------------------------------
# free parameters and transforms
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class FreeParameter:
    name: str
    transform: str  # "log", "identity" or "logit"

    def to_unconstrained(self, value: float) -> float:
        if self.transform == "log":
            if value <= 0:
                raise InvalidInputError(f"{self.name} must be positive, got {value!r}")
            return math.log(value)
        if self.transform == "logit":
            if not 0.0 < value < 1.0:
                raise InvalidInputError(f"{self.name} must be in (0, 1), got {value!r}")
            return math.log(value / (1.0 - value))
        return value

    def to_natural(self, x: float) -> float:
        if self.transform == "log":
            return math.exp(x)
        if self.transform == "logit":
            return 1.0 / (1.0 + math.exp(-x))
        return x

    def natural_scale_sd(self, x: float, sd_x: float) -> float:
        """Delta-method standard deviation on the natural scale."""
        if self.transform == "log":
            return math.exp(x) * sd_x
        if self.transform == "logit":
            p = 1.0 / (1.0 + math.exp(-x))
            return p * (1.0 - p) * sd_x
        return sd_x


def free_parameters(model: ModelSpec) -> list[FreeParameter]:
    """Ordered list of the parameters a fit will estimate for this model."""
    op = model.operator
    params = [
        FreeParameter("b11", "log"),
        FreeParameter("b21", "identity"),
        FreeParameter("b22", "log"),
        FreeParameter("h11", "log"),
    ]
    if op.variant != "L3":
        params.append(FreeParameter("h22", "log"))
    if op.variant == "L2":
        params.append(FreeParameter("h21", "log"))
    if model.noise1.kind != "white" and not (model.lock1 and model.noise1.kind == "matern"):
        params.append(FreeParameter("kappa_n1", "log"))
    if model.noise2.kind != "white" and not (model.lock2 and model.noise2.kind == "matern"):
        params.append(FreeParameter("kappa_n2", "log"))
    if model.noise1.kind == "oscillating":
        params.append(FreeParameter("omega1", "logit"))
    if model.noise2.kind == "oscillating":
        params.append(FreeParameter("omega2", "logit"))
    return params


def _get_param(model: ModelSpec, name: str) -> float:
    if name in ("b11", "b21", "b22", "h11", "h22", "h21"):
        return getattr(model.operator, name)
    if name == "kappa_n1":
        return model.noise1.kappa_n
    if name == "kappa_n2":
        return model.noise2.kappa_n
    if name == "omega1":
        return model.noise1.omega
    if name == "omega2":
        return model.noise2.omega
    raise InvalidInputError(f"unknown parameter {name!r}")


def _set_params(model: ModelSpec, values: dict) -> ModelSpec:
    op_updates = {k: v for k, v in values.items() if hasattr(model.operator, k)}
    op = replace(model.operator, **op_updates) if op_updates else model.operator
    n1, n2 = model.noise1, model.noise2
    if "kappa_n1" in values or "omega1" in values:
        n1 = replace(
            n1,
            kappa_n=values.get("kappa_n1", n1.kappa_n),
            omega=values.get("omega1", n1.omega),
            kappa_sq_exact=None,
        )
    if "kappa_n2" in values or "omega2" in values:
        n2 = replace(
            n2,
            kappa_n=values.get("kappa_n2", n2.kappa_n),
            omega=values.get("omega2", n2.omega),
            kappa_sq_exact=None,
        )
    return replace(model, operator=op, noise1=n1, noise2=n2)


def pack(model: ModelSpec, params: list[FreeParameter]) -> np.ndarray:
    """Transformed (unconstrained) vector of the free parameters."""
    return np.array([p.to_unconstrained(_get_param(model, p.name)) for p in params])


def unpack(model: ModelSpec, params: list[FreeParameter], x: np.ndarray) -> ModelSpec:
    """Model with the free parameters replaced by natural values of x."""
    values = {p.name: p.to_natural(float(v)) for p, v in zip(params, x)}
    return _set_params(model, values)


# ----------------------------------------------------------------------
# posterior evaluation
# ----------------------------------------------------------------------


class PosteriorEvaluator:
    """Caches observation products and symbolic factorizations across theta.

    log|Q| is computed from the triangular structure of the system (see
    :class:`oscgmrf.precision.SystemLogdet`), so only the conditional
    precision Q_c needs a full-size factorization per evaluation.  Its
    sparsity pattern does not depend on theta (only values change), so the
    fill-reducing analysis is done once and refactorization is value-only.
    A pattern change (it can happen if a parameter crosses an exact zero)
    is detected and triggers a re-analysis.
    """

    def __init__(
        self,
        fem: FemMatrices,
        obs: ObservationSet,
        model: ModelSpec,
        priors: PriorSpec,
        ordering: str = "mindeg",
    ):
        self.fem = fem
        self.obs = obs
        self.template = model
        self.priors = priors
        self.ordering = ordering
        self.params = free_parameters(model)
        AtQn = obs.A.T.multiply(obs.noise_precision[None, :]).tocsc()
        self.AtQnA = _symmetrize(AtQn @ obs.A)
        self.AtQny = np.asarray(AtQn @ obs.values).ravel()
        self._logdet_q = SystemLogdet(fem, ordering)
        self._sym_qc = None
        self.evaluations = 0

    def _factor_qc(self, Qc: sp.csc_matrix):
        from .cholesky import SymbolicFactor

        sym = self._sym_qc
        if sym is None or not sym.matches(Qc):
            sym = SymbolicFactor(Qc, ordering=self.ordering)
            self._sym_qc = sym
        return sym.factorize(Qc)

    def log_prior(self, model: ModelSpec) -> float:
        return sum(
            self.priors.log_density(p.name, _get_param(model, p.name))
            for p in self.params
        )

    def log_posterior_model(self, model: ModelSpec) -> float:
        """Constant-free log posterior at a natural-scale model."""
        self.evaluations += 1
        lp = self.log_prior(model)
        if not np.isfinite(lp):
            return -math.inf
        gmrf = system_precision(self.fem, model)
        ld_q = self._logdet_q(model)
        Qc = _symmetrize(gmrf.Q + self.AtQnA)
        fqc = self._factor_qc(Qc)
        mu = fqc.solve(self.AtQny)
        return lp + 0.5 * ld_q - 0.5 * fqc.logdet() + 0.5 * float(mu @ self.AtQny)

    def negative_log_posterior(self, x: np.ndarray) -> float:
        """Objective on the unconstrained scale (for minimizers)."""
        try:
            model = unpack(self.template, self.params, x)
            model.validate()
            return -self.log_posterior_model(model)
        except NotSPDError:
            logger.warning("posterior evaluation hit a non-SPD precision; returning +inf")
            return math.inf
        except (OverflowError, InvalidInputError):
            return math.inf


def log_posterior(
    model: ModelSpec,
    fem: FemMatrices,
    obs: ObservationSet,
    priors: PriorSpec | None = None,
    ordering: str = "mindeg",
) -> float:
    """Constant-free marginal log posterior of theta given the observations."""
    ev = PosteriorEvaluator(fem, obs, model, priors or PriorSpec(), ordering)
    return ev.log_posterior_model(model)


# ----------------------------------------------------------------------
# MAP fit
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class FitOptions:
    maxiter: int = 200
    gtol: float = 1e-5
    fd_step: float = 1e-5      # relative central-difference step for gradients
    hess_step: float = 1e-4    # relative step for the Hessian at the mode
    ordering: str = "mindeg"


@dataclass(frozen=True)
class FitResult:
    """Outcome of a MAP fit.

    ``estimates``/``stderr`` are keyed by parameter name on the natural
    scale; ``converged`` requires both optimizer success and a positive
    definite curvature at the mode (otherwise the standard errors are not
    trustworthy and are reported as NaN where undefined).
    """

    model: ModelSpec
    estimates: dict
    stderr: dict
    log_posterior: float
    iterations: int
    evaluations: int
    converged: bool
    message: str
    seconds: float

    def summary_lines(self) -> list[str]:
        rows = ["parameter   estimate      stderr"]
        for name, est in self.estimates.items():
            rows.append(f"{name:<10}  {est: .6g}    {self.stderr[name]:.6g}")
        rows.append(
            f"log-posterior {self.log_posterior:.6f}  "
            f"iterations {self.iterations}  converged {self.converged}"
        )
        return rows


def _central_gradient(f, x: np.ndarray, rel_step: float) -> np.ndarray:
    g = np.empty_like(x)
    for i in range(x.size):
        h = rel_step * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2.0 * h)
    return g


def _central_hessian(f, x: np.ndarray, rel_step: float) -> np.ndarray:
    p = x.size
    h = rel_step * np.maximum(1.0, np.abs(x))
    H = np.empty((p, p))
    f0 = f(x)
    for i in range(p):
        ei = np.zeros(p)
        ei[i] = h[i]
        H[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / (h[i] * h[i])
        for j in range(i + 1, p):
            ej = np.zeros(p)
            ej[j] = h[j]
            H[i, j] = H[j, i] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4.0 * h[i] * h[j])
    return H


def fit_map(
    fem: FemMatrices,
    obs: ObservationSet,
    model: ModelSpec,
    priors: PriorSpec | None = None,
    options: FitOptions | None = None,
) -> FitResult:
    """Maximum-a-posteriori fit of the free hyperparameters.

    ``model`` provides both the structure (variant, noise kinds, locks) and
    the initial values.  Returns natural-scale estimates with delta-method
    standard errors.
    """
    from scipy.optimize import minimize

    opts = options or FitOptions()
    ev = PosteriorEvaluator(fem, obs, model, priors or PriorSpec(), opts.ordering)
    x0 = pack(model, ev.params)
    t0 = time.perf_counter()

    fun = ev.negative_log_posterior
    f0 = float(fun(x0))
    if not np.isfinite(f0):
        raise InvalidInputError(
            "initial parameter values give a non-finite posterior; "
            "choose a different starting model"
        )
    # Central differences of f carry cancellation noise of order
    # |f| * eps / step, which bounds the gradient accuracy from below;
    # asking BFGS for more than that floor only buys line-search failures.
    noise_floor = abs(f0) * np.finfo(float).eps / opts.fd_step
    gtol_eff = max(opts.gtol, 50.0 * noise_floor)

    jac = lambda x: _central_gradient(fun, x, opts.fd_step)  # noqa: E731
    res = minimize(
        fun,
        x0,
        jac=jac,
        method="BFGS",
        options={"gtol": gtol_eff, "maxiter": opts.maxiter},
    )
    xhat = res.x
    grad_norm = float(np.max(np.abs(res.jac)))

    H = _central_hessian(fun, xhat, opts.hess_step)
    H = 0.5 * (H + H.T)
    if np.all(np.isfinite(H)):
        min_eig = float(np.linalg.eigvalsh(H).min())
    else:
        min_eig = -math.inf  # mode borders an invalid region
    hess_pd = min_eig > 0.0
    if hess_pd:
        cov = np.linalg.inv(H)
        sd_x = np.sqrt(np.diag(cov))
    else:
        sd_x = np.full(xhat.size, np.nan)
        logger.warning(
            "curvature at the mode is not positive definite "
            "(min eigenvalue %.3g); standard errors unavailable", min_eig
        )

    model_hat = unpack(model, ev.params, xhat)
    estimates = {p.name: _get_param(model_hat, p.name) for p in ev.params}
    stderr = {
        p.name: p.natural_scale_sd(float(xhat[i]), float(sd_x[i]))
        for i, p in enumerate(ev.params)
    }
    elapsed = time.perf_counter() - t0
    # "Converged" means the gradient reached the achievable accuracy and the
    # curvature there is positive definite.  BFGS may report failure when a
    # line search stalls on finite-difference noise at the mode; that is a
    # successful fit by this definition, so judge by the gradient itself.
    at_mode = bool(res.success) or grad_norm <= 100.0 * max(noise_floor, opts.gtol)
    converged = at_mode and hess_pd
    logger.info(
        "fit finished in %.1fs: %s after %d iterations "
        "(%d evaluations, |grad| %.3g, gtol %.3g)",
        elapsed, res.message, res.nit, ev.evaluations, grad_norm, gtol_eff,
    )
    return FitResult(
        model=model_hat,
        estimates=estimates,
        stderr=stderr,
        log_posterior=-float(res.fun),
        iterations=int(res.nit),
        evaluations=ev.evaluations,
        converged=converged,
        message=str(res.message),
        seconds=elapsed,
    )


# ----------------------------------------------------------------------
# prediction
# ----------------------------------------------------------------------


def predict(
    model: ModelSpec,
    fem: FemMatrices,
    obs: ObservationSet,
    targets: sp.spmatrix,
    ordering: str = "mindeg",
) -> tuple[np.ndarray, np.ndarray]:
    """Predictive mean and standard deviation of the latent field.

    ``targets`` is an interpolation matrix (one row per target point, built
    with :func:`oscgmrf.observations.interpolation_matrix`).  The returned
    sd is the posterior sd of a^T x, without observation noise.
    """
    from .sampler import conditional

    mean_field, post = conditional(system_precision(fem, model), obs, ordering)
    A = sp.csr_matrix(targets)
    if A.shape[1] != post.size:
        raise InvalidInputError(
            f"target matrix has {A.shape[1]} columns, field size is {post.size}"
        )
    mean = np.asarray(A @ mean_field).ravel()
    var = post.factor(ordering).invquad_columns(np.asarray(A.todense().T))
    return mean, np.sqrt(var)
