"""DtN spectra of radial conductivities.

Two independent numerical routes compute ``lambda_k[gamma]``:

``conductivity-ode``
    Riccati form of the radial mode equation in ``s = log r``. With
    ``g = gamma r f'/f`` and ``delta = g - k gamma`` one gets
    ``delta' = -k gamma_s - (2k+d-2) delta - delta^2 / gamma`` and
    ``lambda_k = k gamma(1) + delta(0)``. Integrating the deviation keeps
    relative accuracy even when ``lambda_k - k a`` is tiny.
``schrodinger-halfline``
    Liouville reduction to ``V = Delta(sqrt gamma) / sqrt gamma``, then to
    the half-line potential ``Q(t) = e^{-2t} V(e^{-t})`` and its Jost
    solution at ``z = k + nu_d``; ``lambda_k = a lambda_k[V] - b``.

Both use RK4 on a uniform grid at two step sizes and report the Richardson
extrapolate together with its error estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import kernels
from .conductivity import ConductivitySpec
from .errors import EllipticityError, NearEigenvalueError, SolverError
from .profiles import (
    ExampleConductivity,
    PowerSum,
    RadialProfile,
    moment_sigma,
    trace_a,
    trace_b,
)

__all__ = [
    "DtnSpectrum",
    "HalflinePotential",
    "conductivity_to_potential",
    "potential_to_halfline",
    "weyl_m",
    "dtn_eigenvalue_schrodinger",
    "dtn_eigenvalue_conductivity",
    "dtn_from_schrodinger",
    "linearized_dtn",
    "spectrum",
    "closed_form_spectrum",
    "spectrum_difference",
    "ROUTES",
]

ROUTES = ("conductivity-ode", "schrodinger-halfline", "closed-form")

R_START = 1e-6          # inner radius for the conductivity route
BASE_DT = 2.5e-4        # fine-grid spacing; RK4 steps are 2*dt and 4*dt
TAIL_EPS = 1e-12        # target size of Q at the truncation point
JOST_FLOOR = 1e-10      # |phi(0)| below this is treated as a Jost zero


@dataclass(frozen=True)
class DtnSpectrum:
    """DtN eigenvalues ``lambda_0..lambda_K`` of a radial problem.

    ``err_estimate[k]`` is the absolute error estimate of mode ``k``.
    """

    d: int
    eigenvalues: np.ndarray
    route: str
    err_estimate: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float)
        err = np.broadcast_to(np.asarray(self.err_estimate, dtype=float), lam.shape).copy()
        if lam.ndim != 1 or lam.size < 2:
            raise ValueError("spectrum needs at least lambda_0 and lambda_1")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "err_estimate", err)

    @property
    def k_max(self) -> int:
        return self.eigenvalues.size - 1

    @property
    def nu_d(self) -> float:
        return (self.d - 2) / 2.0

    def __len__(self):
        return self.eigenvalues.size

    def __getitem__(self, k):
        return self.eigenvalues[k]

    def truncate(self, k_max: int) -> "DtnSpectrum":
        return DtnSpectrum(self.d, self.eigenvalues[: k_max + 1], self.route,
                           self.err_estimate[: k_max + 1], dict(self.meta))


@dataclass(frozen=True)
class HalflinePotential:
    """Potential ``Q`` on a uniform grid over ``[0, T]``.

    ``tail_rate`` is the declared decay exponent (``|Q| <= C e^{-rate t}``
    beyond ``T``); ``norms[l]`` is ``int_0^T |Q| (1+t)^l dt`` for
    ``l = 0..3`` and ``norm_bounds`` the matching a-priori bounds from
    ``sup |V|`` when available.
    """

    t: np.ndarray
    values: np.ndarray
    T: float
    tail_rate: float = 2.0
    norms: dict = field(default_factory=dict)
    norm_bounds: dict = field(default_factory=dict)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    def __call__(self, t):
        return np.interp(t, self.t, self.values, right=0.0)


# reductions ----------------------------------------------------------------


class ConductivityPotential(RadialProfile):
    """``V = Delta(sqrt gamma) / sqrt gamma`` computed from ``gamma, gamma', gamma''``."""

    def __init__(self, gamma: RadialProfile):
        super().__init__(gamma.d)
        self.gamma = gamma
        self.singularity = gamma.singularity
        self.breakpoints = gamma.breakpoints

    def __repr__(self):
        return f"ConductivityPotential({self.gamma!r})"

    def _value(self, r):
        g = self.gamma
        g0, g1, g2 = g._value(r), g._d1(r), g._d2(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(r > 0, g1 / r, g2)
        return g2 / (2 * g0) - g1 * g1 / (4 * g0 * g0) + (self.d - 1) * ratio / (2 * g0)

    def _d1(self, r, h=1e-6):
        lo, hi = np.clip(r - h, 0, 1), np.clip(r + h, 0, 1)
        return (self._value(hi) - self._value(lo)) / (hi - lo)

    def _d2(self, r, h=1e-4):
        lo, hi = np.clip(r - h, 0, 1), np.clip(r + h, 0, 1)
        return (self._d1(hi) - self._d1(lo)) / (hi - lo)


def _is_constant(profile):
    return isinstance(profile, PowerSum) and all(b == 0 and m == 0 for _, b, m in profile.terms)


def conductivity_to_potential(spec: ConductivitySpec) -> RadialProfile:
    """Schrodinger potential ``Delta(sqrt gamma) / sqrt gamma``.

    Closed forms are returned for constants and the example family.

    Raises
    ------
    EllipticityError
        If ``gamma`` is not strictly positive.
    """
    gamma = spec.profile
    if _is_constant(gamma):
        if gamma(1.0) <= 0:
            raise EllipticityError("conductivity must be positive")
        return PowerSum(spec.d, [])
    if isinstance(gamma, ExampleConductivity):
        return gamma.potential()
    r = np.linspace(0, 1, 2001)
    if np.min(gamma(r)) <= 0:
        raise EllipticityError("conductivity touches zero")
    return ConductivityPotential(gamma)


def _fine_grid(length, dt_max):
    n = int(math.ceil(length / dt_max / 4.0)) * 4
    return np.linspace(0.0, length, n + 1), length / n


def _step_for(z_max):
    # keep 4*dt*(2 z_max) well inside the RK4 stability interval
    return min(BASE_DT, 0.15 / (2.0 * z_max + 2.0))


def potential_to_halfline(V: RadialProfile, T: float | None = None, dt: float | None = None,
                          z_max: float = 1.0) -> HalflinePotential:
    """Half-line potential ``Q(t) = e^{-2t} V(e^{-t})`` on ``[0, T]``.

    ``T`` defaults to ``max(12, -log(1e-12)/2 + log(1 + sup|V|))``.
    """
    r_probe = np.geomspace(1e-8, 1.0, 4000)
    sup_v = float(np.max(np.abs(V(r_probe))))
    if T is None:
        T = max(12.0, -math.log(TAIL_EPS) / 2 + math.log1p(sup_v))
    if dt is None:
        dt = _step_for(z_max)
    t, dt = _fine_grid(float(T), dt)
    r = np.exp(-t)
    Q = r * r * V(r)
    if not np.all(np.isfinite(Q)):
        raise SolverError("half-line potential is not finite on the grid")
    norms = {}
    bounds = {}
    for ell in range(4):
        norms[ell] = float(integrate.simpson(np.abs(Q) * (1 + t) ** ell, x=t))
        c_ell = integrate.quad(lambda s, ell=ell: (1 + s) ** ell * math.exp(-2 * s), 0, np.inf)[0]
        bounds[ell] = c_ell * sup_v
    return HalflinePotential(t, Q, float(T), 2.0, norms, bounds)


def jost_data(Q: HalflinePotential, zs, stride: int = 1):
    """Renormalized Jost data ``(phi(0), phi'(0))`` for each ``z``."""
    return kernels.jost_shoot(Q.values, zs, Q.dt, stride)


def _jost_richardson(Q: HalflinePotential, zs):
    F1, D1 = jost_data(Q, zs, 1)
    F2, D2 = jost_data(Q, zs, 2)
    return F1, D1, F2, D2


def weyl_m(Q: HalflinePotential, z: float) -> float:
    """Weyl function ``m(-z^2) = v'(0)/v(0)`` of the decaying solution.

    Raises
    ------
    NearEigenvalueError
        When ``v(0)`` is numerically zero (``-z^2`` is an eigenvalue).
    """
    F1, D1, F2, D2 = _jost_richardson(Q, [z])
    if abs(F1[0]) < JOST_FLOOR:
        raise NearEigenvalueError(f"Jost function vanishes near z={z:g} (F={F1[0]:.3g})")
    m1 = D1[0] / F1[0]
    m2 = D2[0] / F2[0]
    return float((16 * m1 - m2) / 15 - z)


def _schrodinger_sharp(Q: HalflinePotential, ks, nud):
    """``lambda_k[V]`` with Richardson error estimates."""
    ks = np.asarray(ks, dtype=float)
    zs = ks + nud
    F1, D1, F2, D2 = _jost_richardson(Q, zs)
    if np.any(np.abs(F1) < JOST_FLOOR):
        bad = ks[np.abs(F1) < JOST_FLOOR]
        raise NearEigenvalueError(f"Jost function vanishes for modes {bad.astype(int).tolist()}")
    s1 = -D1 / F1
    s2 = -D2 / F2
    dev = (16 * s1 - s2) / 15
    if not np.all(np.isfinite(dev)):
        raise SolverError("non-finite Jost data")
    return ks + dev, np.abs(s1 - s2) / 15


def dtn_eigenvalue_schrodinger(V: RadialProfile, k: int, Q: HalflinePotential | None = None) -> float:
    """``lambda_k[V] = -m(-(k+nu_d)^2) - nu_d`` via the Jost solution."""
    if Q is None:
        Q = potential_to_halfline(V, z_max=k + V.nu_d)
    lam, _ = _schrodinger_sharp(Q, [k], V.nu_d)
    return float(lam[0])


def _log_grid(spec: ConductivitySpec, dt):
    s, dt = _fine_grid(-math.log(R_START), dt)
    s = s + math.log(R_START)
    s[-1] = 0.0
    r = np.exp(s)
    gamma = spec.profile
    g = gamma(r)
    if np.min(g) <= 0:
        raise EllipticityError("conductivity touches zero")
    gs = r * gamma.derivative(r, 1)
    return g, gs, dt


def _conductivity_deviation(spec: ConductivitySpec, ks):
    ks = np.asarray(ks, dtype=float)
    g, gs, dt = _log_grid(spec, _step_for(float(np.max(ks, initial=1.0))))
    y1 = kernels.riccati_deviation(g, gs, ks, spec.d, dt, 1)
    y2 = kernels.riccati_deviation(g, gs, ks, spec.d, dt, 2)
    if not (np.all(np.isfinite(y1)) and np.all(np.isfinite(y2))):
        bad = ks[~(np.isfinite(y1) & np.isfinite(y2))].astype(int).tolist()
        raise SolverError(f"Riccati integration diverged for modes {bad} (dt={dt:.3g})")
    lam = ks * g[-1] + (16 * y1 - y2) / 15
    err = np.abs(y1 - y2) / 15 + 1e-15 * np.abs(lam)
    return lam, err


def dtn_eigenvalue_conductivity(spec: ConductivitySpec, k: int) -> float:
    """``lambda_k[gamma] = gamma(1) f'(1) / f(1)`` for the regular mode ``f ~ r^k``.

    Raises
    ------
    SolverError
        If the integration blows up.
    """
    if k == 0:
        return 0.0
    lam, _ = _conductivity_deviation(spec, [k])
    return float(lam[0])


def dtn_from_schrodinger(lambdaV: float, a: float, b: float, k: int | None = None) -> float:
    """Conductivity eigenvalue from the Schrodinger one: ``a lambda_k[V] - b``."""
    if a <= 0:
        raise ValueError("boundary trace a must be positive")
    return a * lambdaV - b


def linearized_dtn(h: RadialProfile, k: int) -> float:
    """Eigenvalue of the linearized DtN map at the unit conductivity.

    ``k (2k + d - 2) sigma_{k-1}[h]``, and ``0`` for ``k = 0``.
    """
    if k == 0:
        return 0.0
    return k * (2 * k + h.d - 2) * moment_sigma(h, k - 1)


def closed_form_spectrum(d: int, mu: float, nu: float, k_max: int) -> np.ndarray:
    """Exact eigenvalues of the example family."""
    return ExampleConductivity(d, mu, nu).spectrum(k_max)


def spectrum(spec: ConductivitySpec, k_max: int, route: str = "conductivity-ode") -> DtnSpectrum:
    """Eigenvalues ``lambda_0..lambda_kmax`` along one route.

    Parameters
    ----------
    spec : ConductivitySpec
    k_max : int
        Highest mode, at least 1.
    route : {"conductivity-ode", "schrodinger-halfline", "closed-form"}
        The closed form is available for the example family and constants.

    Returns
    -------
    DtnSpectrum
        ``lambda_0`` is set to 0 exactly.
    """
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    if route not in ROUTES:
        raise ValueError(f"unknown route {route!r}; choose from {ROUTES}")
    d = spec.d
    ks = np.arange(1, k_max + 1, dtype=float)
    a = trace_a(spec.profile)
    b = trace_b(spec.profile)
    meta = {"a": a, "b": b}
    if route == "closed-form":
        gamma = spec.profile
        if isinstance(gamma, ExampleConductivity):
            lam = gamma.spectrum(k_max)[1:]
        elif _is_constant(gamma):
            lam = a * ks
        else:
            raise ValueError("closed-form spectrum only exists for the example family")
        err = np.zeros_like(lam)
    elif route == "conductivity-ode":
        lam, err = _conductivity_deviation(spec, ks)
        meta["r_start"] = R_START
    else:
        V = conductivity_to_potential(spec)
        Q = potential_to_halfline(V, z_max=k_max + (d - 2) / 2)
        sharp, err_s = _schrodinger_sharp(Q, ks, (d - 2) / 2)
        lam = a * sharp - b
        err = a * err_s + 1e-15 * np.abs(lam)
        meta["T"] = Q.T
    lam = np.concatenate([[0.0], lam])
    err = np.concatenate([[0.0], err])
    return DtnSpectrum(d, lam, route, err, meta)


def spectrum_difference(spec1: ConductivitySpec, spec2: ConductivitySpec, k_max: int,
                        difference: RadialProfile | None = None):
    """``lambda_k[gamma_2] - lambda_k[gamma_1]`` for ``k = 0..k_max`` at full relative precision.

    The two Riccati deviations are integrated as a coupled pair, with
    ``gamma_2 - gamma_1`` supplied exactly (``difference``) or evaluated
    pointwise. Returns the differences and their error estimates.
    """
    if spec1.d != spec2.d:
        raise ValueError("dimension mismatch")
    ks = np.arange(1, k_max + 1, dtype=float)
    s, dt = _fine_grid(-math.log(R_START), _step_for(k_max))
    s = s + math.log(R_START)
    s[-1] = 0.0
    r = np.exp(s)
    g1 = spec1.profile(r)
    g1s = r * spec1.profile.derivative(r, 1)
    if difference is None:
        dg = spec2.profile(r) - g1
        dgs = r * spec2.profile.derivative(r, 1) - g1s
    else:
        dg = difference(r)
        dgs = r * difference.derivative(r, 1)
    e1 = kernels.riccati_difference(g1, g1s, dg, dgs, ks, spec1.d, dt, 1)
    e2 = kernels.riccati_difference(g1, g1s, dg, dgs, ks, spec1.d, dt, 2)
    if not (np.all(np.isfinite(e1)) and np.all(np.isfinite(e2))):
        raise SolverError("paired Riccati integration diverged")
    diff = ks * dg[-1] + (16 * e1 - e2) / 15
    err = np.abs(e1 - e2) / 15 + 1e-15 * np.abs(ks * dg[-1])
    return np.concatenate([[0.0], diff]), np.concatenate([[0.0], err])
