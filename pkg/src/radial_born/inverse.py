"""Conductivity recovery from Born data, plus stability and locality experiments.

The fit works on the moment side. A Born profile ``h`` determines the
spectrum ``lambda_j = 2 j (j + nu_d) sigma_{j-1}[h]``, so a candidate
conductivity is scored by comparing its forward spectrum against those
numbers; no profile reconstruction happens inside the optimizer loop.
"""

from __future__ import annotations

import logging
import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize, stats

from .born import BornApproximation, born_profile
from .conductivity import ConductivitySpec
from .errors import AccuracyWarning, EllipticityError, RadialBornError
from .forward import DtnSpectrum, spectrum, spectrum_difference
from .profiles import (
    ExampleConductivity,
    RadialProfile,
    default_grid,
    moment_sigma,
    norm_sobolev,
    trace_a,
    trace_b,
)

__all__ = [
    "FitProblem",
    "FitResult",
    "LogPolyConductivity",
    "StabilityRecord",
    "LocalityReport",
    "born_data_spectrum",
    "noisy_samples",
    "fit_conductivity",
    "stability_sweep",
    "locality_test",
]

log = logging.getLogger(__name__)

DEFAULT_K = 40
MIN_PAIRS = 8
MIN_DECADES = 2.0
DIFF_MOMENT_FLOOR = 1e-10   # absolute moment floor for reconstructed Born differences
LOCAL_RATIO = 0.02          # outside/inside Born-difference ratio that counts as vanishing


# parameter spaces -----------------------------------------------------------


class LogPolyConductivity(RadialProfile):
    """``log gamma = log a + (b/a)(r^2 - 1) r^2 + (1 - r^2)^2 sum_i theta_i r^(2i)``.

    Both boundary traces are fixed by construction: ``gamma(1) = a`` and
    ``gamma'(1)/2 = b``. The trace term is bounded by ``|b/a|/4`` inside.
    """

    def __init__(self, d: int, a: float, b: float, theta):
        super().__init__(d)
        if a <= 0:
            raise EllipticityError("boundary value must be positive")
        self.a, self.b = float(a), float(b)
        self.theta = np.asarray(theta, dtype=float)
        # exponent as a polynomial in x = r^2
        P = np.polynomial.Polynomial
        body = P([1.0, -2.0, 1.0]) * P(self.theta) if self.theta.size else P([0.0])
        self._L = P([math.log(self.a), -self.b / self.a, self.b / self.a]) + body
        self._L1 = self._L.deriv()
        self._L2 = self._L1.deriv()

    def __repr__(self):
        return f"LogPolyConductivity(d={self.d}, a={self.a}, b={self.b}, theta={self.theta.tolist()})"

    def _value(self, r):
        return np.exp(self._L(r * r))

    def _d1(self, r):
        x = r * r
        return np.exp(self._L(x)) * 2 * r * self._L1(x)

    def _d2(self, r):
        x = r * r
        g1 = 2 * r * self._L1(x)
        return np.exp(self._L(x)) * (g1 * g1 + 2 * self._L1(x) + 4 * x * self._L2(x))


@dataclass
class FitProblem:
    """Inputs of :func:`fit_conductivity`.

    Attributes
    ----------
    d : int
    target : RadialProfile, BornApproximation or (r, values)
        Born data. Sample pairs must cover ``[r_min, 1]``.
    weights : array_like, optional
        Per-sample confidence for sampled targets; zero-weight samples are
        dropped before the moments are integrated.
    space : str
        ``"family:example"`` (parameters ``mu``, ``nu``) or ``"poly:n"``
        (``n`` coefficients of the log-polynomial with pinned traces).
    fixed : dict
        Parameters held fixed, e.g. ``{"nu": 3.0}``.
    initial : sequence, optional
        Start point; a small grid of starts is used when omitted.
    reg : float
        Ridge weight on the free parameters (poly space only).
    max_nfev : int
        Optimizer budget in forward evaluations per start.
    k_max : int
        Number of modes in the misfit.
    K : float
        Ellipticity bound every candidate must respect.
    forward_route : str
    """

    d: int
    target: object
    weights: np.ndarray | None = None
    space: str = "family:example"
    fixed: dict = field(default_factory=dict)
    initial: tuple | None = None
    reg: float = 0.0
    max_nfev: int = 500
    k_max: int = DEFAULT_K
    K: float = 20.0
    forward_route: str = "conductivity-ode"


@dataclass(frozen=True)
class FitResult:
    """Best candidate with its misfit report."""

    spec: ConductivitySpec
    params: dict
    misfit: float
    nfev: int
    success: bool
    message: str
    projections: int
    data_spectrum: np.ndarray
    fit_spectrum: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)


def _simpson_moments(r, y, d, k_max):
    # constant extension over [0, r[0]] keeps the low moments honest
    out = np.empty(k_max)
    for k in range(k_max):
        n = 2 * k + d - 1
        out[k] = integrate.simpson(y * r**n, x=r) + y[0] * r[0] ** (n + 1) / (n + 1)
    return out


def born_data_spectrum(target, d: int, k_max: int, weights=None) -> np.ndarray:
    """Spectrum ``lambda_0..lambda_kmax`` encoded by Born data.

    ``lambda_j = 2 j (j + nu_d) sigma_{j-1}[target]``.
    """
    nud = (d - 2) / 2.0
    if isinstance(target, BornApproximation):
        target = target.profile
    if isinstance(target, RadialProfile):
        if target.d != d:
            raise ValueError("target dimension mismatch")
        sig = np.array([moment_sigma(target, k) for k in range(k_max)])
    else:
        r, y = (np.asarray(v, dtype=float) for v in target)
        if weights is not None:
            keep = np.asarray(weights, dtype=float) > 0
            r, y = r[keep], y[keep]
        order = np.argsort(r)
        r, y = r[order], y[order]
        if r.size < 5 or r[-1] < 1.0 - 1e-12:
            raise ValueError("sampled Born data must reach r = 1 with at least 5 points")
        sig = _simpson_moments(r, y, d, k_max)
    j = np.arange(1, k_max + 1, dtype=float)
    return np.concatenate([[0.0], 2 * j * (j + nud) * sig])


def _data_traces(target, weights=None):
    if isinstance(target, BornApproximation):
        target = target.profile
    if isinstance(target, RadialProfile):
        return trace_a(target), trace_b(target)
    r, y = (np.asarray(v, dtype=float) for v in target)
    if weights is not None:
        keep = np.asarray(weights, dtype=float) > 0
        r, y = r[keep], y[keep]
    order = np.argsort(r)[-4:]
    coef = np.polyfit(r[order] - 1.0, y[order], 3)
    return float(coef[-1]), 0.5 * float(coef[-2])


def noisy_samples(profile: RadialProfile, level: float, seed: int, n: int = 401,
                  r_min: float = 0.0):
    """Multiplicative i.i.d. noise ``h(r) (1 + level * N(0,1))`` on a uniform grid.

    Returns
    -------
    r, values : ndarray
    meta : dict
        The seed and noise level, for the run manifest.
    """
    rng = np.random.default_rng(seed)
    r = np.linspace(r_min, 1.0, n)
    if profile.singularity != "none" and r[0] == 0.0:
        r = r[1:]
    vals = profile(r) * (1.0 + level * rng.standard_normal(r.size))
    return r, vals, {"seed": int(seed), "noise_level": float(level), "n_samples": int(r.size)}


class _Space:
    """Maps a free-parameter vector to a candidate conductivity."""

    def __init__(self, problem: FitProblem, a: float, b: float):
        self.d = problem.d
        self.K = problem.K
        self.projections = 0
        kind, _, arg = problem.space.partition(":")
        if kind == "family" and arg == "example":
            self.kind = "example"
            self.fixed = {k: float(v) for k, v in problem.fixed.items()}
            unknown = set(self.fixed) - {"mu", "nu"}
            if unknown:
                raise ValueError(f"unknown fixed parameters {sorted(unknown)}")
            self.names = [n for n in ("mu", "nu") if n not in self.fixed]
            lo = {"mu": 1e-3, "nu": 0.0 if self.d > 2 else 1e-3}
            self.lower = np.array([lo[n] for n in self.names])
            self.upper = np.full(len(self.names), 50.0)
        elif kind == "poly" and arg.isdigit() and int(arg) >= 0:
            self.kind = "poly"
            self.a, self.b = a, b
            if a <= 0:
                raise EllipticityError("data boundary value is not positive")
            self.names = [f"theta{i}" for i in range(int(arg))]
            self.lower = np.full(len(self.names), -np.inf)
            self.upper = np.full(len(self.names), np.inf)
        else:
            raise ValueError(f"unknown parameter space {problem.space!r}")
        if not self.names:
            raise ValueError("parameter space has no free parameters")

    def starts(self, initial):
        if initial is not None:
            return [np.asarray(initial, dtype=float)]
        if self.kind == "poly":
            return [np.zeros(len(self.names))]
        grid = {"mu": [0.7, 2.5], "nu": [0.7, 2.5]}
        mesh = np.meshgrid(*[grid[n] for n in self.names], indexing="ij")
        return [np.array(p) for p in zip(*(m.ravel() for m in mesh))]

    def params(self, x):
        if self.kind == "example":
            out = dict(self.fixed)
            out.update({n: float(v) for n, v in zip(self.names, x)})
            return out
        return {"a": self.a, "b": self.b, **{n: float(v) for n, v in zip(self.names, x)}}

    def profile(self, x):
        if self.kind == "example":
            p = self.params(x)
            return ExampleConductivity(self.d, p["mu"], p["nu"])
        return LogPolyConductivity(self.d, self.a, self.b, x)

    def candidate(self, x) -> ConductivitySpec:
        prof = self.profile(x)
        fam = None
        if self.kind == "example":
            fam = {"name": "example", **self.params(x)}
        try:
            return ConductivitySpec.from_profile(prof, K=self.K, N=math.inf, family=fam)
        except EllipticityError:
            if self.kind != "poly":
                raise
        # shrink the interior part until the candidate is back inside [1/K, K]
        lo, hi = 0.0, 1.0
        for _ in range(40):
            mid = 0.5 * (lo + hi)
            try:
                ConductivitySpec.from_profile(self.profile(mid * x), K=self.K, N=math.inf)
                lo = mid
            except EllipticityError:
                hi = mid
        self.projections += 1
        log.info("candidate %s left the ellipticity band; scaled by %.6g", x.tolist(), lo)
        return ConductivitySpec.from_profile(self.profile(lo * x), K=self.K, N=math.inf)


def fit_conductivity(problem: FitProblem) -> FitResult:
    """Output least-squares fit of a conductivity to Born data.

    The misfit is ``(lambda_j[candidate] - lambda_j[data]) / j`` for
    ``j = 1..k_max`` plus ``sqrt(reg) * params``; it is minimized by a
    trust-region least-squares solver with finite-difference Jacobians from
    several starts.

    Warns
    -----
    AccuracyWarning
        When no start converged; the best point found is returned.
    """
    t0 = time.perf_counter()
    K = int(problem.k_max)
    lam_data = born_data_spectrum(problem.target, problem.d, K, problem.weights)
    a, b = _data_traces(problem.target, problem.weights)
    space = _Space(problem, a, b)
    j = np.arange(1, K + 1, dtype=float)
    sqrt_reg = math.sqrt(max(problem.reg, 0.0))
    penalty_scale = 10.0 * float(np.max(np.abs(lam_data[1:] / j))) + 10.0

    def residual(x):
        try:
            spec = space.candidate(x)
            lam = spectrum(spec, K, problem.forward_route).eigenvalues
        except (RadialBornError, ValueError):
            return np.full(K + len(x) * (sqrt_reg > 0), penalty_scale)
        res = (lam[1:] - lam_data[1:]) / j
        if sqrt_reg > 0:
            res = np.concatenate([res, sqrt_reg * x])
        return res

    best, runs, total_nfev = None, [], 0
    for x0 in space.starts(problem.initial):
        x0 = np.clip(x0, space.lower + 1e-9, space.upper - 1e-9)
        sol = optimize.least_squares(residual, x0, bounds=(space.lower, space.upper),
                                     method="trf", max_nfev=problem.max_nfev, x_scale="jac",
                                     xtol=1e-12, ftol=1e-14, gtol=1e-12)
        total_nfev += int(sol.nfev)
        runs.append({"start": x0.tolist(), "x": sol.x.tolist(), "cost": float(sol.cost),
                     "status": int(sol.status)})
        if best is None or sol.cost < best.cost:
            best = sol
    success = bool(best.status > 0)
    if not success:
        warnings.warn(f"optimizer did not converge: {best.message}", AccuracyWarning, stacklevel=2)
    spec = space.candidate(best.x)
    lam_fit = spectrum(spec, K, problem.forward_route).eigenvalues
    misfit = float(np.sqrt(np.mean(((lam_fit[1:] - lam_data[1:]) / j) ** 2)))
    meta = {"starts": runs, "space": problem.space, "k_max": K, "reg": problem.reg,
            "route": problem.forward_route, "seconds": time.perf_counter() - t0,
            "data_traces": (a, b)}
    return FitResult(spec, space.params(best.x), misfit, total_nfev, success, str(best.message),
                     space.projections, lam_data, lam_fit, meta)


# stability ------------------------------------------------------------------


@dataclass(frozen=True)
class StabilityRecord:
    """Norm pairs ``(||dgamma^B||, ||dgamma||)`` in ``W^{2,1}`` over a sweep.

    ``exponent`` is the log-log slope of the conductivity norm against the
    Born norm (``nan`` when fewer than 8 usable pairs or under two decades
    of Born norms); ``s`` is the inner radius of the region, ``0`` for the
    whole ball; ``K`` is the common ellipticity bound of the sweep.
    """

    eps: np.ndarray
    born_norms: np.ndarray
    cond_norms: np.ndarray
    exponent: float
    intercept: float
    spearman: float
    s: float
    used: np.ndarray
    notes: tuple = ()
    K: float = math.inf


def _difference_spec(d, eigen, err):
    return DtnSpectrum(d, eigen, "difference", err)


def stability_sweep(base: ConductivitySpec, perturbation: RadialProfile, eps_list, s: float | None = None,
                    k_max: int = 200, n_basis: int = 30) -> StabilityRecord:
    """Sweep ``gamma_eps = gamma + eps * perturbation`` and compare norm pairs.

    The Born difference is reconstructed from the spectral difference,
    which is integrated directly so that small ``eps`` keep full relative
    accuracy. Norms are ``W^{2,1}`` over ``U_s`` (or the ball when ``s`` is
    ``None``). Identical pairs are recorded but excluded from the fit.
    """
    if perturbation.d != base.d:
        raise ValueError("dimension mismatch")
    d = base.d
    r_min = 0.0 if s is None else float(s)
    eps = np.asarray(list(eps_list), dtype=float)
    born_n = np.zeros(eps.size)
    cond_n = np.zeros(eps.size)
    notes = []
    # one ellipticity bound for the whole sweep
    r = np.linspace(0.0, 1.0, 2001)
    g0, pv = base.profile(r), perturbation(r)
    lo = min(float(np.min(g0 + e * pv)) for e in np.append(eps, 0.0))
    hi = max(float(np.max(g0 + e * pv)) for e in np.append(eps, 0.0))
    if lo <= 0:
        raise EllipticityError("a sweep member is not positive")
    K = max(base.K, 1.01 * max(hi, 1.0 / lo))
    for i, e in enumerate(eps):
        if e == 0.0:
            continue
        dgam = e * perturbation
        spec2 = ConductivitySpec.from_profile(base.profile + dgam, K=K, N=math.inf, p=base.p)
        dlam, err = spectrum_difference(base, spec2, k_max, difference=dgam)
        dborn = born_profile(_difference_spec(d, dlam, err), route="moments", n_basis=n_basis,
                             a=trace_a(base.profile), moment_floor=DIFF_MOMENT_FLOOR)
        born_n[i] = norm_sobolev(dborn.profile, 2, 1, r_min=r_min)
        cond_n[i] = norm_sobolev(dgam, 2, 1, r_min=r_min)
    used = (born_n > 0) & (cond_n > 0)
    exponent = intercept = float("nan")
    rho = float("nan")
    if used.sum() >= 2:
        rho = float(stats.spearmanr(born_n[used], cond_n[used]).statistic)
    if used.sum() >= MIN_PAIRS:
        lb = np.log10(born_n[used])
        if lb.max() - lb.min() >= MIN_DECADES:
            exponent, intercept = (float(v) for v in np.polyfit(np.log(born_n[used]),
                                                                np.log(cond_n[used]), 1))
        else:
            notes.append("Born norms span fewer than two decades; no exponent fitted")
    else:
        notes.append(f"fewer than {MIN_PAIRS} usable pairs; no exponent fitted")
    return StabilityRecord(eps, born_n, cond_n, exponent, intercept, rho, r_min, used, tuple(notes),
                           K)


# locality -------------------------------------------------------------------


@dataclass(frozen=True)
class LocalityReport:
    """Decay of ``|lambda_k[gamma_2] - lambda_k[gamma_1]|`` against ``s^(2k)``.

    ``rate`` is the fitted slope of ``log|d lambda_k|`` against ``2k`` over
    ``k_range``; ``passed`` means it is within ``rel_tol`` of ``log s``.
    ``inconclusive`` is set when the differences are at the solver noise
    floor. The Born and conductivity differences are reported as sup norms
    on ``U_s`` and on ``B_s``; ``born_local`` says the Born difference on
    ``U_s`` is negligible (below ``LOCAL_RATIO`` of its size on ``B_s``).
    """

    s: float
    k: np.ndarray
    dlam: np.ndarray
    err: np.ndarray
    rate: float
    log_s: float
    rel_deviation: float
    passed: bool
    inconclusive: bool
    born_diff_outside: float
    born_diff_inside: float
    cond_diff_outside: float
    cond_diff_inside: float
    rel_tol: float = 0.05

    @property
    def born_local(self) -> bool:
        scale = max(self.born_diff_inside, self.born_diff_outside)
        return scale == 0.0 or self.born_diff_outside <= LOCAL_RATIO * scale

    @property
    def conductivity_local(self) -> bool:
        return self.cond_diff_outside == 0.0


def locality_test(spec1: ConductivitySpec, spec2: ConductivitySpec, s: float,
                  k_range: tuple = (10, 40), rel_tol: float = 0.05,
                  difference: RadialProfile | None = None, n_basis: int = 30) -> LocalityReport:
    """Exponential decay test of the spectral difference of two conductivities.

    ``difference`` may supply ``gamma_2 - gamma_1`` exactly; otherwise it is
    evaluated pointwise from the two profiles.
    """
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    k_lo, k_hi = int(k_range[0]), int(k_range[1])
    if not 1 <= k_lo < k_hi:
        raise ValueError("k_range must satisfy 1 <= k_lo < k_hi")
    d = spec1.d
    dlam, err = spectrum_difference(spec1, spec2, k_hi, difference=difference)
    k = np.arange(dlam.size)
    floor = 3.0 * err
    sel = (k >= k_lo) & (np.abs(dlam) > floor)
    inconclusive = not np.any(np.abs(dlam[1:]) > floor[1:]) or sel.sum() < 5
    log_s = math.log(s)
    if sel.sum() >= 2:
        rate = float(np.polyfit(2.0 * k[sel], np.log(np.abs(dlam[sel])), 1)[0])
    else:
        rate = float("nan")
    rel_dev = abs(rate / log_s - 1.0) if math.isfinite(rate) else float("inf")
    passed = (not inconclusive) and rel_dev <= rel_tol
    # Born and conductivity differences, outside and inside the inner ball
    r = default_grid(1024)
    out_mask, in_mask = r > s, r <= s
    if difference is None:
        dg = spec2.profile(r) - spec1.profile(r)
    else:
        dg = difference(r)
    if inconclusive and not np.any(dlam[1:]):
        db = np.zeros_like(r)
    else:
        dborn = born_profile(_difference_spec(d, dlam, err), r, route="moments", n_basis=n_basis,
                             a=trace_a(spec1.profile), moment_floor=DIFF_MOMENT_FLOOR)
        db = dborn.profile(r)
    return LocalityReport(float(s), k, dlam, err, rate, log_s, rel_dev, bool(passed),
                          bool(inconclusive), float(np.max(np.abs(db[out_mask]))),
                          float(np.max(np.abs(db[in_mask]))), float(np.max(np.abs(dg[out_mask]))),
                          float(np.max(np.abs(dg[in_mask]))), rel_tol)
