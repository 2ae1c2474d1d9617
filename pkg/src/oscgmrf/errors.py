"""Exception taxonomy for the oscgmrf package.

Grouping matters for the CLI: configuration/validation problems exit with
code 2, numeric failures with code 3 and output I/O failures with code 4.
"""


class OscGmrfError(Exception):
    """Base class for all package-specific errors."""


class InvalidInputError(OscGmrfError, ValueError):
    """Caller passed arguments outside the documented domain."""


class ConfigError(OscGmrfError, ValueError):
    """A run configuration (file or section) failed validation."""


class ObservationFormatError(ConfigError):
    """An observation CSV row could not be parsed."""


class MeshFormatError(ConfigError):
    """A mesh file could not be parsed."""


class AssemblyError(OscGmrfError, ValueError):
    """Finite-element assembly failed (e.g. degenerate triangle)."""


class OutOfDomainError(OscGmrfError, ValueError):
    """A query point lies outside the mesh hull."""


class NumericError(OscGmrfError, ArithmeticError):
    """Base class for runtime numerical failures."""


class NotSPDError(NumericError):
    """A matrix expected to be symmetric positive definite is not."""


class PoleError(NumericError):
    """A spectral density was requested on (or numerically at) a pole."""


class NonConvergenceError(NumericError):
    """An iterative procedure failed to converge."""
