"""Exception hierarchy shared by all modules.

Each class carries an ``exit_code`` so the command-line front end can map
numeric failures and schema problems onto stable process exit statuses.
"""


class RadialBornError(Exception):
    """Base class for all package errors."""

    exit_code = 3


class DomainError(RadialBornError, ValueError):
    """Evaluation requested outside the domain where a profile is finite."""


class InsufficientDataError(RadialBornError, ValueError):
    """A sampled profile has too few nodes for the requested operation."""


class DivergenceError(RadialBornError, ArithmeticError):
    """An integral that should be finite is not (non-integrable singularity)."""


class EllipticityError(RadialBornError, ValueError):
    """A conductivity leaves the band ``[1/K, K]`` or touches zero."""


class DegenerateFamilyError(RadialBornError, ValueError):
    """The example family is degenerate for the requested parameters."""


class NearEigenvalueError(RadialBornError, ArithmeticError):
    """The Jost function is too small at the requested spectral parameter."""


class SolverError(RadialBornError, RuntimeError):
    """An ODE integration produced a non-finite or unreliable result."""


class TruncationError(RadialBornError, ArithmeticError):
    """A truncated series cannot meet its requested tolerance."""


class SchemaError(RadialBornError, ValueError):
    """Malformed input document (JSON spec, CSV table)."""

    exit_code = 4


class ConditioningWarning(UserWarning):
    """A least-squares basis is nearly degenerate; coefficients are unreliable."""


class AccuracyWarning(UserWarning):
    """Input data is too short or noisy for the advertised accuracy."""
