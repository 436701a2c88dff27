"""Spectral analysis of half-line Schrodinger operators.

For a potential ``Q`` on ``[0, inf)`` the Jost solution behaves like
``e^{-zt}`` at infinity; the Jost function is its value at ``t = 0``.
Zeros ``z = kappa > 0`` are bound states (eigenvalue ``-kappa^2``), a zero
at ``z = 0`` is a zero resonance. Everything is computed from the
renormalized solution ``phi = e^{zt} psi`` (see :mod:`radial_born.kernels`).

The Born potential ``v^B`` has moments ``L(z) = lambda[V] - k`` with
``z = k + nu_d``, and ``L`` has simple poles at ``z = 0`` and at every
``kappa_j``. Their residues give the singular amplitudes ``a_0`` and
``a_j``; :func:`spectral_singular_part` maps them onto the singular
coefficients of the Born conductivity.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import kernels
from .errors import ConditioningWarning
from .forward import HalflinePotential, conductivity_to_potential, potential_to_halfline
from .profiles import PowerSum, RadialProfile

__all__ = [
    "SpectralReport",
    "SingularDecomposition",
    "jost_function",
    "discrete_spectrum",
    "detect_zero_resonance",
    "spectral_report",
    "singular_amplitudes",
    "spectral_singular_part",
    "fit_singular_decomposition",
    "halfline_from_spec",
]

RESONANCE_THRESHOLD = 1e-6
MERGE_GAP = 1e-3


@dataclass(frozen=True)
class SpectralReport:
    """Jost-function summary of a half-line potential.

    ``kappas`` are descending; ``a0`` is the residue at ``z = 0`` (only
    when a resonance is flagged) and ``amplitudes[j]`` the residue at
    ``kappas[j]``.
    """

    jost_at_zero: float
    kappas: tuple
    resonance: bool
    z_grid: np.ndarray
    jost_samples: np.ndarray
    threshold: float = RESONANCE_THRESHOLD
    a0: float = 0.0
    amplitudes: tuple = ()

    @property
    def J(self) -> int:
        return len(self.kappas)


@dataclass(frozen=True)
class SingularDecomposition:
    """``gamma^B = -c0 log r + sum_j c_j r^(-2 kappa_j) + regular``.

    ``terms`` holds ``(kappa_j, c_j)`` with increasing ``kappa_j``.
    """

    c0: float
    terms: tuple = ()
    regular: RadialProfile | None = None
    residual_norm: float = 0.0
    method: str = "fit"
    extra: dict = field(default_factory=dict, compare=False)

    def singular_profile(self, d: int) -> PowerSum:
        """The singular part as a power/log sum."""
        parts = [(-self.c0, 0.0, 1)] if self.c0 else []
        parts += [(c, -2.0 * k, 0) for k, c in self.terms]
        return PowerSum(d, parts)


def halfline_from_spec(spec, z_max: float | None = None) -> HalflinePotential:
    """Half-line potential of a conductivity spec."""
    V = conductivity_to_potential(spec)
    return potential_to_halfline(V, z_max=max(1.0, z_max or 0.0))


def _jost(Q: HalflinePotential, zs):
    zs = np.atleast_1d(np.asarray(zs, dtype=float))
    F1, D1 = kernels.jost_shoot(Q.values, zs, Q.dt, 1)
    F2, D2 = kernels.jost_shoot(Q.values, zs, Q.dt, 2)
    return (16 * F1 - F2) / 15, (16 * D1 - D2) / 15


def jost_function(Q: HalflinePotential, z):
    """Jost function ``F(z) = psi(0, z)`` for real ``z >= 0``.

    Scalars give a float, arrays an array.
    """
    if np.any(np.asarray(z) < 0):
        raise ValueError("Jost function is evaluated for z >= 0 only")
    F, _ = _jost(Q, z)
    return float(F[0]) if np.ndim(z) == 0 else F


def discrete_spectrum(Q: HalflinePotential, z_max: float, n_scan: int = 400,
                      xtol: float = 1e-10) -> list:
    """Bound-state parameters ``kappa_j`` in ``(0, z_max]``, descending.

    Sign changes of ``F`` on a uniform scan (densified where ``|F| < 0.1``)
    are refined by Brent's method.
    """
    z = np.linspace(z_max / n_scan, z_max, n_scan)
    F = jost_function(Q, z)
    small = np.abs(F) < 0.1
    if np.any(small):
        extra = []
        for i in np.flatnonzero(small):
            lo = z[i - 1] if i > 0 else 0.0
            hi = z[min(i + 1, z.size - 1)]
            extra.append(np.linspace(lo, hi, 21)[1:-1])
        if small[0]:
            extra.append(np.geomspace(1e-6, z[0], 25, endpoint=False))
        z = np.unique(np.concatenate([z] + extra))
        F = jost_function(Q, z)
    roots = []
    for i in np.flatnonzero(np.sign(F[:-1]) * np.sign(F[1:]) < 0):
        root = optimize.brentq(lambda x: jost_function(Q, x), z[i], z[i + 1], xtol=xtol)
        roots.append(float(root))
    return sorted(roots, reverse=True)


def detect_zero_resonance(Q: HalflinePotential, threshold: float = RESONANCE_THRESHOLD):
    """Zero-resonance test ``|F(0)| < threshold * max(1, sup_[0,1] |F|)``.

    Returns
    -------
    flag : bool
    F0 : float
    """
    F = jost_function(Q, np.linspace(0.0, 1.0, 21))
    scale = max(1.0, float(np.max(np.abs(F))))
    return bool(abs(F[0]) < threshold * scale), float(F[0])


def _residue(Q, z0, eta=1e-5):
    """Residue of ``L(z) = -phi'(0)/phi(0)`` at a simple zero ``z0`` of ``F``, times 2."""
    if z0 == 0.0:
        zs = np.array([0.0, eta, 2 * eta])
        F, D = _jost(Q, zs)
        dF = (-3 * F[0] + 4 * F[1] - F[2]) / (2 * eta)
    else:
        zs = np.array([z0, z0 - eta, z0 + eta])
        F, D = _jost(Q, zs)
        dF = (F[2] - F[1]) / (2 * eta)
    return float(-2.0 * D[0] / dF)


def singular_amplitudes(Q: HalflinePotential, kappas=(), resonance: bool = False):
    """Residue amplitudes ``a_0`` (zero if no resonance) and ``a_j`` at each ``kappa_j``.

    They are the coefficients of ``r^-2`` and ``r^(-2 kappa_j - 2)`` in the
    Born potential ``v^B``.
    """
    a0 = _residue(Q, 0.0) if resonance else 0.0
    return a0, tuple(_residue(Q, k) for k in kappas)


def spectral_report(Q: HalflinePotential, d: int, z_max: float | None = None,
                    threshold: float = RESONANCE_THRESHOLD, amplitudes: bool = True) -> SpectralReport:
    """Jost samples, bound states, resonance flag and residue amplitudes."""
    nud = (d - 2) / 2.0
    z_max = nud + 0.5 if z_max is None else z_max
    kappas = discrete_spectrum(Q, z_max)
    flag, F0 = detect_zero_resonance(Q, threshold)
    zg = np.linspace(0.0, z_max, 101)
    a0, amps = singular_amplitudes(Q, kappas, flag) if amplitudes else (0.0, ())
    return SpectralReport(F0, tuple(kappas), flag, zg, jost_function(Q, zg), threshold, a0, amps)


def _merge(kappas, gap=MERGE_GAP):
    ks = sorted(kappas)
    merged = []
    for k in ks:
        if merged and k - merged[-1][-1] < gap:
            merged[-1].append(k)
        else:
            merged.append([k])
    if any(len(g) > 1 for g in merged):
        warnings.warn("nearly coincident bound states merged into one term", ConditioningWarning,
                      stacklevel=3)
    return [float(np.mean(g)) for g in merged]


def spectral_singular_part(report: SpectralReport, a: float, d: int) -> SingularDecomposition:
    """Singular coefficients of ``gamma^B`` from the residue amplitudes.

    ``c0 = -a a0 / nu_d`` and ``c_j = -a a_j / (kappa_j (d - 2 - 2 kappa_j))``.
    """
    nud = (d - 2) / 2.0
    c0 = -a * report.a0 / nud if (report.resonance and nud > 0) else 0.0
    terms = []
    for k, amp in sorted(zip(report.kappas, report.amplitudes)):
        terms.append((k, -a * amp / (k * (d - 2 - 2 * k))))
    return SingularDecomposition(c0, tuple(terms), None, 0.0, "residue")


class _Remainder(RadialProfile):
    """``born - singular`` with the fitted constant used at ``r = 0``."""

    def __init__(self, born: RadialProfile, singular: PowerSum, value_at_zero: float):
        super().__init__(born.d)
        self.born, self.sing, self.v0 = born, singular, value_at_zero

    def __repr__(self):
        return f"Remainder({self.born!r} - {self.sing!r})"

    def _value(self, r):
        with np.errstate(all="ignore"):
            out = self.born._value(r) - self.sing._value(r)
        return np.where(r == 0, self.v0, out)

    def _d1(self, r):
        return self.born._d1(r) - self.sing._d1(r)

    def _d2(self, r):
        return self.born._d2(r) - self.sing._d2(r)


def fit_singular_decomposition(born: RadialProfile, report: SpectralReport, r_min: float = 1e-3,
                               r_cut: float = 0.3, n_samples: int = 400) -> SingularDecomposition:
    """Least-squares split of a Born profile into singular and regular parts.

    Basis on ``[r_min, r_cut]``: ``-log r`` (only with a zero resonance),
    ``r^(-2 kappa_j)`` for each bound state, and ``1, r, r^2`` for the
    regular part.

    Warns
    -----
    ConditioningWarning
        When bound states nearly coincide or the basis is ill-conditioned,
        and when a fitted ``c_j`` comes out negative beyond fit noise.
    """
    d = born.d
    kappas = _merge(report.kappas) if report.kappas else []
    r = np.geomspace(r_min, r_cut, n_samples)
    y = born(r)
    cols, names = [], []
    if report.resonance:
        cols.append(-np.log(r))
        names.append("log")
    for k in kappas:
        cols.append(r ** (-2.0 * k))
        names.append(k)
    cols += [np.ones_like(r), r, r * r]
    A = np.column_stack(cols)
    scale = np.linalg.norm(A, axis=0)
    coef, *_ = np.linalg.lstsq(A / scale, y, rcond=None)
    coef = coef / scale
    cond = np.linalg.cond(A / scale)
    if cond > 1e10:
        warnings.warn(f"singular basis is ill-conditioned (cond={cond:.2e})", ConditioningWarning,
                      stacklevel=2)
    resid = y - A @ coef
    c0 = 0.0
    terms = []
    for name, c in zip(names, coef):
        if name == "log":
            c0 = float(c)
        else:
            terms.append((float(name), float(c)))
    noise = float(np.sqrt(np.mean(resid**2)))
    for k, c in terms:
        if c < -10 * noise - 1e-8:
            warnings.warn(f"fitted coefficient for kappa={k:.4g} is negative ({c:.3g})",
                          ConditioningWarning, stacklevel=2)
    dec = SingularDecomposition(c0, tuple(terms), None, float(np.linalg.norm(resid)), "fit",
                                {"cond": float(cond), "smooth": tuple(float(c) for c in coef[-3:])})
    sing = dec.singular_profile(d)
    regular = _Remainder(born, sing, float(coef[-3])) if sing.terms else born
    return SingularDecomposition(dec.c0, dec.terms, regular, dec.residual_norm, "fit", dec.extra)
