"""Bivariate Gaussian random fields with oscillating covariance functions.

Fields are defined through a lower-triangular system of stochastic operator
equations driven by Matern or oscillating noise, discretized with piecewise
linear finite elements so that all computation runs on sparse precision
matrices: sampling, conditioning on noisy point observations, marginal
posterior evaluation and MAP estimation of the hyperparameters.

Quick tour::

    from oscgmrf import (assemble, build_regular_mesh, system_precision,
                         ModelSpec, NoiseSpec, OperatorSpec, sample)

    mesh = build_regular_mesh(25, 25, extent=(0, 20, 0, 20), padding=10)
    model = ModelSpec(
        operator=OperatorSpec(variant="L1", b11=0.5, b21=0.25, b22=1.0,
                              h11=0.25, h22=0.36),
        noise1=NoiseSpec(kind="matern", kappa_n=0.5),
        noise2=NoiseSpec(kind="oscillating", kappa_n=0.6, omega=0.95),
    )
    gmrf = system_precision(assemble(mesh), model)
    draws = sample(gmrf, count=10, seed=42)

The sparse Cholesky kernels are compiled with numba when available; set
``OSCGMRF_NO_NUMBA=1`` to force the pure-numpy reference implementations
(same results, slower).
"""

from .cholesky import CholeskyFactor, SymbolicFactor, cholesky_factor
from .errors import (
    AssemblyError,
    ConfigError,
    InvalidInputError,
    MeshFormatError,
    NonConvergenceError,
    NotSPDError,
    NumericError,
    ObservationFormatError,
    OscGmrfError,
    OutOfDomainError,
    PoleError,
)
from .fem import FemMatrices, assemble, write_matrix_market
from .config import RunConfig, load_config, model_section
from .inference import (
    PARAMETER_NAMES,
    FitOptions,
    FitResult,
    PosteriorEvaluator,
    Prior,
    PriorSpec,
    fit_map,
    free_parameters,
    log_posterior,
    predict,
)
from .kernels import BACKEND, USING_NUMBA
from .mesh import Mesh, build_mesh_from_points, build_regular_mesh
from .models import (
    FIELD_NON_OSCILLATING,
    FIELD_OSCILLATING,
    FIELD_POSSIBLY_OSCILLATING,
    ModelSpec,
    NoiseSpec,
    OperatorSpec,
    classify_fields,
)
from .observations import (
    ObservationSet,
    empty_observations,
    interpolation_matrix,
    make_observations,
    read_observation_csv,
    write_observation_csv,
)
from .precision import (
    Gmrf,
    SystemLogdet,
    noise_precision,
    operator_block,
    system_operator,
    system_precision,
)
from .sampler import (
    SampleBatch,
    conditional,
    sample,
    sample_conditional,
    synthesize_observations,
)
from .spectra import (
    CorrelationCurve,
    SystemSpectra,
    full_system_spectra,
    lattice_correlations,
    matern_correlation,
    noise_spectrum,
    spectral_peak,
    system_spectra,
    triangular_spectra,
    univariate_spectrum,
)

__version__ = "0.1.0"

__all__ = [
    "AssemblyError",
    "BACKEND",
    "CholeskyFactor",
    "ConfigError",
    "CorrelationCurve",
    "FIELD_NON_OSCILLATING",
    "FIELD_OSCILLATING",
    "FIELD_POSSIBLY_OSCILLATING",
    "FemMatrices",
    "FitOptions",
    "FitResult",
    "Gmrf",
    "InvalidInputError",
    "Mesh",
    "MeshFormatError",
    "ModelSpec",
    "NoiseSpec",
    "NonConvergenceError",
    "NotSPDError",
    "NumericError",
    "ObservationFormatError",
    "ObservationSet",
    "OperatorSpec",
    "OscGmrfError",
    "OutOfDomainError",
    "PARAMETER_NAMES",
    "PoleError",
    "PosteriorEvaluator",
    "Prior",
    "PriorSpec",
    "RunConfig",
    "SampleBatch",
    "SymbolicFactor",
    "SystemLogdet",
    "SystemSpectra",
    "USING_NUMBA",
    "assemble",
    "build_mesh_from_points",
    "build_regular_mesh",
    "cholesky_factor",
    "classify_fields",
    "conditional",
    "empty_observations",
    "fit_map",
    "free_parameters",
    "full_system_spectra",
    "interpolation_matrix",
    "lattice_correlations",
    "load_config",
    "log_posterior",
    "make_observations",
    "matern_correlation",
    "model_section",
    "noise_precision",
    "noise_spectrum",
    "operator_block",
    "predict",
    "read_observation_csv",
    "sample",
    "sample_conditional",
    "spectral_peak",
    "synthesize_observations",
    "system_operator",
    "system_precision",
    "system_spectra",
    "triangular_spectra",
    "univariate_spectrum",
    "write_matrix_market",
    "write_observation_csv",
]
