"""Born approximation of a radial conductivity from its DtN spectrum.

The Born approximation ``gamma^B`` is pinned down by its radial moments,
``sigma_k[gamma^B] = lambda_{k+1} / (2 (k+1) (k+1+nu_d))``, and by the
Fourier series of its extension by zero. Two reconstructions are offered:

``moments`` (default)
    Tikhonov-regularized least squares for the coefficients of an
    orthonormal Jacobi expansion in ``x = r^2``. Row weights come from the
    per-mode error of the spectrum, the regularization weight from the
    discrepancy principle. Known singular terms (log and negative powers)
    are subtracted analytically before the solve.
``fourier``
    Numerical inverse Hankel transform of the truncated Fourier series.
    The series can only be summed in double precision up to moderate
    frequencies, so this route is coarse and carries low confidence.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .conductivity import ConductivitySpec
from .errors import AccuracyWarning, TruncationError
from .forward import DtnSpectrum, spectrum as forward_spectrum
from .halfline import SingularDecomposition
from .profiles import (
    ExampleConductivity,
    JacobiSeries,
    LinearCombination,
    PowerSum,
    RadialProfile,
    default_grid,
    jacobi_basis,
    jacobi_rule,
    laplacian_radial,
    moment_sigma,
    trace_a,
    trace_b,
)

__all__ = [
    "BornApproximation",
    "IdentityReport",
    "born_moments",
    "born_fourier",
    "born_profile",
    "born_closed_form",
    "vb_moments",
    "amplitude_from_born",
    "verify_identity",
    "estimate_traces",
    "LOW_CONFIDENCE_RADIUS",
]

LOW_CONFIDENCE_RADIUS = 0.02
QUAD_NODES = 200


@dataclass(frozen=True)
class BornApproximation:
    """Born conductivity ``gamma^B`` and potential ``v^B = Delta gamma^B / (2a)``.

    ``grid``/``values`` tabulate the profile; ``confidence`` is in
    ``[0, 1]`` per grid node.
    """

    d: int
    profile: RadialProfile
    vB: RadialProfile
    route: str
    K: int
    a: float
    spectrum: DtnSpectrum | None = None
    singular: SingularDecomposition | None = None
    grid: np.ndarray | None = None
    values: np.ndarray | None = None
    confidence: np.ndarray | None = None
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, r):
        return self.profile(r)


def born_moments(spectrum: DtnSpectrum) -> np.ndarray:
    """Moments ``sigma_0..sigma_{K-1}`` of the Born approximation."""
    lam = spectrum.eigenvalues
    if lam.size < 3:
        raise ValueError("need at least lambda_0, lambda_1 and lambda_2")
    k = np.arange(lam.size - 1, dtype=float)
    return lam[1:] / (2 * (k + 1) * (k + 1 + spectrum.nu_d))


def vb_moments(lambda_v) -> np.ndarray:
    """Moments ``sigma_k[v^B] = lambda_k[V] - k`` of the Born potential."""
    lam = np.asarray(lambda_v, dtype=float)
    return lam - np.arange(lam.size)


def estimate_traces(spectrum: DtnSpectrum, k_lo: int | None = None):
    """Boundary traces ``(a, b)`` from the high-mode asymptotics.

    Fits ``lambda_k = a k - b + sum_j c_j / k^j`` (``j <= 5``) over the upper
    three quarters of the available modes.
    """
    lam = spectrum.eigenvalues
    K = lam.size - 1
    k_lo = max(1, K // 4) if k_lo is None else k_lo
    k = np.arange(k_lo, K + 1, dtype=float)
    if k.size < 4:
        k = np.arange(1, K + 1, dtype=float)
    n_cols = max(2, min(7, k.size - 1))
    cols = [k, -np.ones_like(k)] + [k ** -j for j in range(1, n_cols - 1)]
    A = np.column_stack(cols)
    scale = np.linalg.norm(A, axis=0)
    coef, *_ = np.linalg.lstsq(A / scale, lam[k.astype(int)], rcond=None)
    coef = coef / scale
    return float(coef[0]), float(coef[1])


# Fourier series -----------------------------------------------------------------


def _fourier_terms(spectrum: DtnSpectrum, rho: float):
    lam = spectrum.eigenvalues
    d = spectrum.d
    k = np.arange(1, lam.size, dtype=float)
    if rho == 0.0:
        logmag = np.where(k == 1, 0.0, -np.inf)
    else:
        logmag = (2 * k - 2) * math.log(rho / 2)
    logmag = logmag - special.gammaln(k + 1) - special.gammaln(k + d / 2)
    with np.errstate(divide="ignore"):
        logmag = logmag + np.log(np.abs(lam[1:]))
    sign = np.where(k % 2 == 1, 1.0, -1.0) * np.sign(lam[1:])
    return sign * np.exp(logmag), k


def born_fourier(spectrum: DtnSpectrum, rho: float, tol: float = 1e-9,
                 return_error: bool = False):
    """Fourier transform of the zero-extended Born approximation at ``|xi| = rho``.

    Sums ``pi^(d/2) sum_k (-1)^(k-1) (rho/2)^(2k-2) lambda_k / (k! Gamma(k+d/2))``.
    The error bound adds the first omitted term (with ``lambda`` extrapolated
    linearly) and the cancellation loss ``eps * sum |terms|``.

    Raises
    ------
    TruncationError
        When the bound exceeds ``tol * max(1, |value|)``.
    """
    if rho < 0:
        raise ValueError("rho must be non-negative")
    d = spectrum.d
    terms, k = _fourier_terms(spectrum, float(rho))
    total = math.fsum(terms.tolist())
    K = k.size
    lam = spectrum.eigenvalues
    slope = lam[-1] / K
    kn = K + 1
    if rho == 0.0:
        tail = 0.0
    else:
        tail = math.exp((2 * kn - 2) * math.log(rho / 2) - special.gammaln(kn + 1)
                        - special.gammaln(kn + d / 2)) * abs(slope * kn)
    rounding = 4 * np.finfo(float).eps * float(np.sum(np.abs(terms)))
    err = math.pi ** (d / 2) * (tail + rounding)
    value = math.pi ** (d / 2) * total
    if err > tol * max(1.0, abs(value)):
        raise TruncationError(
            f"Fourier series at rho={rho:g}: error bound {err:.2e} exceeds tolerance")
    return (value, err) if return_error else value


def _fourier_cutoff(spectrum: DtnSpectrum, tol: float = 1e-8, step: float = 0.25):
    """Largest ``P`` on a ``step`` lattice where the series meets ``tol``."""
    P = 0.0
    while True:
        try:
            born_fourier(spectrum, P + step, tol)
        except TruncationError:
            return P
        P += step
        if P > 200:
            return P


def _fourier_route(spectrum: DtnSpectrum, grid, a: float, b: float, n_nodes=800):
    """Inverse Hankel transform after removing ``h = a + b (r^2 - 1)``.

    ``h`` carries the boundary value and slope of ``gamma^B``, so the
    remainder is C^1 across the sphere and its transform decays fast; the
    eigenvalues of ``h`` are exact, ``k (2k+d-2) sigma_{k-1}[h]``.
    """
    d = spectrum.d
    h = PowerSum(d, [(a - b, 0.0), (b, 2.0)])
    k = np.arange(spectrum.eigenvalues.size)
    lam_h = np.array([0.0] + [kk * (2 * kk + d - 2) * moment_sigma(h, kk - 1) for kk in k[1:]])
    rest = DtnSpectrum(d, spectrum.eigenvalues - lam_h, spectrum.route, spectrum.err_estimate)
    P = _fourier_cutoff(rest)
    if P < 2:
        raise TruncationError("Fourier series is unusable beyond rho=2")
    x, w = np.polynomial.legendre.leggauss(n_nodes)
    rho = 0.5 * P * (x + 1)
    w = 0.5 * P * w
    ghat = np.array([born_fourier(rest, p, 1.0) for p in rho])
    ghat *= np.sinc(rho / P)  # Lanczos damping against Gibbs ringing
    order = d / 2 - 1
    r = np.asarray(grid, dtype=float)
    rr = np.where(r > 0, r, 1e-12)
    kern = special.jv(order, np.outer(rr, rho)) * rho ** (d / 2)
    vals = (2 * math.pi) ** (-d / 2) * rr ** (-order) * (kern @ (w * ghat))
    return vals + h(r), P


# moment route --------------------------------------------------------------------


def _singular_moments(singular: SingularDecomposition | None, d: int, K: int) -> np.ndarray:
    if singular is None:
        return np.zeros(K)
    prof = singular.singular_profile(d)
    return np.array([moment_sigma(prof, j) for j in range(K)])


def _design(n_basis: int, nud: float, K: int) -> np.ndarray:
    x, w = jacobi_rule(QUAD_NODES, nud)
    P = jacobi_basis(n_basis, nud, x)
    j = np.arange(K)
    X = x[None, :] ** j[:, None]
    return X @ (w[:, None] * P.T)


def _tikhonov_discrepancy(A, m, sd, tau):
    Aw = A / sd[:, None]
    mw = m / sd
    U, S, Vt = np.linalg.svd(Aw, full_matrices=False)
    beta = U.T @ mw
    target = tau * math.sqrt(m.size)

    def solve(alpha):
        c = Vt.T @ (S / (S**2 + alpha**2) * beta)
        return c, float(np.linalg.norm(Aw @ c - mw))

    lo, hi = -20.0, 20.0
    c0, r0 = solve(10.0**lo)
    if r0 > target:
        return c0, 10.0**lo, r0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        _, res = solve(10.0**mid)
        if res > target:
            hi = mid
        else:
            lo = mid
    c, res = solve(10.0**lo)
    return c, 10.0**lo, res


def _confidence(r, route):
    base = 1.0 if route == "moments" else 0.5
    return np.where(np.asarray(r) < LOW_CONFIDENCE_RADIUS, 0.25 * base, base)


def born_profile(spectrum: DtnSpectrum, grid=None, *, route: str = "moments",
                 singular: SingularDecomposition | None = None, a: float | None = None,
                 n_basis: int = 30, noise_floor: float = 1e-12, tau: float = 1.5,
                 moment_floor: float = 0.0) -> BornApproximation:
    """Reconstruct ``gamma^B`` (and ``v^B``) from a DtN spectrum.

    Parameters
    ----------
    spectrum : DtnSpectrum
    grid : array_like, optional
        Radii at which the result is tabulated (default composite grid).
    route : {"moments", "fourier"}
    singular : SingularDecomposition, optional
        Known singular part (``c0`` and ``(kappa_j, c_j)``); its moments are
        removed before the regularized solve and it is added back exactly.
    a : float, optional
        Boundary value of ``gamma``; estimated from the spectrum otherwise.
    n_basis : int
        Number of Jacobi polynomials (moment route).
    noise_floor : float
        Relative floor of the moment noise model.
    moment_floor : float
        Absolute floor, as a fraction of ``max |sigma_k|``. Useful for
        differences whose moments decay geometrically, which a polynomial
        basis cannot match to per-mode relative precision.
    tau : float
        Discrepancy-principle safety factor.

    Warns
    -----
    AccuracyWarning
        For fewer than 20 modes.
    """
    d = spectrum.d
    K = spectrum.k_max
    if K < 20:
        warnings.warn(f"only {K} modes; reconstruction accuracy is limited", AccuracyWarning,
                      stacklevel=2)
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    a_est, b_est = estimate_traces(spectrum)
    a = a_est if a is None else float(a)
    meta = {"b_estimate": b_est, "a_estimate": a_est}
    if route == "moments":
        nud = spectrum.nu_d
        m = born_moments(spectrum)
        j = np.arange(K, dtype=float)
        scale = (j + 1) * (2 * j + d)
        sd = np.maximum(noise_floor * np.abs(m), spectrum.err_estimate[1:] / scale)
        sd = np.maximum(sd, moment_floor * float(np.max(np.abs(m))))
        sd = np.maximum(sd, 1e-300)
        n_basis = min(n_basis, K)
        A = _design(n_basis, nud, K)
        target = m - _singular_moments(singular, d, K)
        coef, alpha, resid = _tikhonov_discrepancy(A, target, sd, tau)
        regular = JacobiSeries(d, coef)
        parts = [(1.0, regular)]
        if singular is not None and (singular.c0 or singular.terms):
            parts.append((1.0, singular.singular_profile(d)))
        profile = LinearCombination(parts) if len(parts) > 1 else regular
        meta.update({"n_basis": n_basis, "alpha": alpha, "weighted_residual": resid,
                     "tau": tau, "noise_floor": noise_floor, "moment_floor": moment_floor})
        tab = grid[grid > 0] if profile.singularity != "none" else grid
        values = profile(tab)
    elif route == "fourier":
        tab = grid[grid > 0]
        values, P = _fourier_route(spectrum, tab, a, b_est)
        from .profiles import SampledProfile

        profile = SampledProfile(d, tab, values)
        meta.update({"P": P})
    else:
        raise ValueError("route must be 'moments' or 'fourier'")
    vB = laplacian_radial(profile) / (2 * a)
    return BornApproximation(d, profile, vB, route, K, a, spectrum, singular, tab, values,
                             _confidence(tab, route), meta)


def born_closed_form(spec: ConductivitySpec, grid=None) -> BornApproximation:
    """Exact Born approximation for constants and the example family."""
    gamma = spec.profile
    if isinstance(gamma, ExampleConductivity):
        prof = gamma.born()
    elif isinstance(gamma, PowerSum) and all(b == 0 and m == 0 for _, b, m in gamma.terms):
        prof = gamma
    else:
        raise ValueError("no closed form for this conductivity")
    a = trace_a(gamma)
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    tab = grid[grid > 0] if prof.singularity != "none" else grid
    vB = laplacian_radial(prof) / (2 * a)
    return BornApproximation(spec.d, prof, vB, "closed-form", 0, a, None, None, tab, prof(tab),
                             np.ones_like(tab))


class Amplitude:
    """Half-line amplitude ``A(t) = e^{-2t} v^B(e^{-t})``."""

    def __init__(self, vB: RadialProfile):
        self.vB = vB

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("amplitude is defined for t >= 0")
        r = np.exp(-t)
        return r * r * self.vB(r)


def amplitude_from_born(vB: RadialProfile) -> Amplitude:
    """Change of variables ``t = -log r`` with the ``|x|^2`` weight."""
    return Amplitude(vB)


@dataclass(frozen=True)
class IdentityReport:
    """Residuals of ``lambda_k - a k + b = sigma_k[Delta gamma^B] / 2`` and of the traces."""

    k: np.ndarray
    residuals: np.ndarray
    trace_a_residual: float
    trace_b_residual: float

    @property
    def max_residual(self) -> float:
        return float(np.max(np.abs(self.residuals))) if self.residuals.size else 0.0


def verify_identity(spec: ConductivitySpec, born: BornApproximation,
                    k_max: int | None = None) -> IdentityReport:
    """Check the spectral identity and boundary traces for a (spec, Born) pair.

    Uses the spectrum attached to ``born`` when present, otherwise the
    conductivity-route spectrum of ``spec``; modes ``k <= K/2`` are tested.
    """
    if spec.d != born.d:
        raise ValueError("dimension mismatch")
    gamma = spec.profile
    a, b = trace_a(gamma), trace_b(gamma)
    if born.spectrum is not None:
        lam = born.spectrum.eigenvalues
    else:
        lam = forward_spectrum(spec, 2 * (k_max or 20), "closed-form"
                               if isinstance(gamma, ExampleConductivity) else "conductivity-ode"
                               ).eigenvalues
    K = lam.size - 1
    kk = np.arange(0, (k_max if k_max is not None else K // 2) + 1)
    lap = laplacian_radial(born.profile)
    res = np.array([lam[k] - a * k + b - 0.5 * moment_sigma(lap, int(k)) for k in kk])
    return IdentityReport(kk, res, abs(trace_a(born.profile) - a), abs(trace_b(born.profile) - b))
