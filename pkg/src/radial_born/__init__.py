"""Radial Dirichlet-to-Neumann spectra and their Born approximation.

Modules
-------
profiles
    Radial profiles, traces, Hausdorff moments, Laplacian and norms.
conductivity
    ``ConductivitySpec`` and its JSON form.
forward
    DtN eigenvalues along two independent ODE routes.
halfline
    Jost function, bound states, zero resonance and singular amplitudes.
born
    Born approximation by moment inversion or Fourier series.
inverse
    Output least-squares fitting, stability sweeps and locality tests.
"""

from .born import BornApproximation, born_closed_form, born_fourier, born_profile, verify_identity
from .conductivity import ConductivitySpec, example_family, load_spec, spec_from_json
from .errors import (
    AccuracyWarning,
    ConditioningWarning,
    DegenerateFamilyError,
    DivergenceError,
    DomainError,
    EllipticityError,
    InsufficientDataError,
    NearEigenvalueError,
    RadialBornError,
    SchemaError,
    SolverError,
    TruncationError,
)
from .forward import DtnSpectrum, HalflinePotential, spectrum, spectrum_difference
from .halfline import SingularDecomposition, SpectralReport, spectral_report
from .inverse import FitProblem, fit_conductivity, locality_test, stability_sweep
from .profiles import (
    Constant,
    ExampleConductivity,
    PiecewisePolynomial,
    PowerSum,
    RadialProfile,
    SampledProfile,
    moment_sigma,
    trace_a,
    trace_b,
)

__all__ = [
    "BornApproximation", "born_closed_form", "born_fourier", "born_profile", "verify_identity",
    "ConductivitySpec", "example_family", "load_spec", "spec_from_json", "AccuracyWarning",
    "ConditioningWarning", "DegenerateFamilyError", "DivergenceError", "DomainError",
    "EllipticityError", "InsufficientDataError", "NearEigenvalueError", "RadialBornError",
    "SchemaError", "SolverError", "TruncationError", "DtnSpectrum", "HalflinePotential",
    "spectrum", "spectrum_difference", "SingularDecomposition", "SpectralReport",
    "spectral_report", "FitProblem", "fit_conductivity", "locality_test", "stability_sweep",
    "Constant", "ExampleConductivity", "PiecewisePolynomial", "PowerSum", "RadialProfile",
    "SampledProfile", "moment_sigma", "trace_a", "trace_b",
]

__version__ = "0.1.0"
