"""Radial profiles on the closed unit ball and their calculus.

A profile is a function ``u_0`` of the radius ``r in [0, 1]`` together with
the ambient dimension ``d``. Every profile exposes its value and first two
radial derivatives; everything else (traces, moments, Laplacian, the
Dirichlet solution operator ``T_d``, weighted norms) is built from those,
with closed forms used whenever the representation allows it.

Conventions
-----------
``sigma_k[h] = int_0^1 h(r) r^(2k+d-1) dr``, ``a(u) = u(1)`` and
``b(u) = u'(1) / 2``. ``T_d f`` is the radial solution of ``-Delta u = f``
vanishing at ``r = 1``.
"""

from __future__ import annotations

import math
import warnings
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate, interpolate, special

from .errors import (
    DegenerateFamilyError,
    DivergenceError,
    DomainError,
    InsufficientDataError,
)

__all__ = [
    "RadialProfile",
    "PowerSum",
    "Constant",
    "ExampleConductivity",
    "ExamplePotential",
    "SampledProfile",
    "PiecewisePolynomial",
    "JacobiSeries",
    "LinearCombination",
    "Product",
    "LaplacianProfile",
    "TdProfile",
    "eval_profile",
    "trace_a",
    "trace_b",
    "moment_sigma",
    "laplacian_radial",
    "apply_Td",
    "norm_dalpha",
    "norm_sobolev",
    "sphere_area",
    "default_grid",
    "example_parameters",
]

_R_SLACK = 1e-12


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere in ``R^d``."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


def default_grid(n: int = 2048, r_min: float = 1e-4, gap: float = 1e-6) -> np.ndarray:
    """Composite radial grid, geometric towards ``r = 0`` and ``r = 1``.

    Half the nodes are log-spaced on ``[r_min, 1/2)``, the rest cluster
    geometrically towards ``1`` (closest interior node ``1 - gap``). The
    last node is exactly ``1``.
    """
    if n < 8:
        raise ValueError("grid needs at least 8 nodes")
    n_lo = n // 2
    lo = np.geomspace(r_min, 0.5, n_lo, endpoint=False)
    hi = 1.0 - np.geomspace(0.5, gap, n - n_lo - 1)
    return np.concatenate([lo, hi, [1.0]])


def _as_radius(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(r)) or np.any(r < -_R_SLACK) or np.any(r > 1.0 + _R_SLACK):
        raise DomainError("radius outside [0, 1]")
    return np.clip(r, 0.0, 1.0)


class RadialProfile:
    """Abstract radial function on the unit ball of ``R^d``.

    Subclasses implement ``_value``, ``_d1`` and ``_d2`` on float arrays.
    ``singularity`` is ``"none"``, ``"log"`` or ``"power"``; profiles with a
    flagged singularity cannot be evaluated at ``r = 0``.
    """

    d: int
    singularity: str = "none"
    breakpoints: tuple = ()
    interpolation_order: int | None = None

    def __init__(self, d: int):
        if int(d) != d or d < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {d!r}")
        self.d = int(d)

    @property
    def nu_d(self) -> float:
        return (self.d - 2) / 2.0

    def _value(self, r):
        raise NotImplementedError

    def _d1(self, r):
        raise NotImplementedError

    def _d2(self, r):
        raise NotImplementedError

    def _checked(self, fn, r):
        scalar = np.ndim(r) == 0
        rr = _as_radius(r)
        if self.singularity != "none" and np.any(rr == 0.0):
            raise DomainError(f"profile has a {self.singularity} singularity at r=0")
        with np.errstate(all="ignore"):
            out = np.asarray(fn(rr), dtype=float)
        out = np.broadcast_to(out, rr.shape)
        if not np.all(np.isfinite(out)):
            raise DomainError("profile evaluation is not finite")
        return float(out) if scalar else np.array(out)

    def __call__(self, r):
        return self._checked(self._value, r)

    def derivative(self, r, order: int = 1):
        """Radial derivative of order 0, 1 or 2."""
        fn = {0: self._value, 1: self._d1, 2: self._d2}[order]
        return self._checked(fn, r)

    # arithmetic -------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Constant(self.d, float(other))
        if not isinstance(other, RadialProfile):
            return NotImplemented
        return LinearCombination([(1.0, self), (1.0, other)])

    __radd__ = __add__

    def __neg__(self):
        return LinearCombination([(-1.0, self)])

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return LinearCombination([(float(other), self)])
        if isinstance(other, RadialProfile):
            return Product(self, other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            return LinearCombination([(1.0 / float(other), self)])
        return NotImplemented

    def sample(self, r=None):
        """Values on ``r`` (default grid when omitted) as a pair of arrays."""
        r = default_grid() if r is None else np.asarray(r, dtype=float)
        if self.singularity != "none":
            r = r[r > 0]
        return r, self(r)


# closed forms ----------------------------------------------------------------


class PowerSum(RadialProfile):
    """Finite sum of terms ``c * r**beta * (log r)**m``.

    Parameters
    ----------
    d : int
        Dimension.
    terms : sequence of (c, beta) or (c, beta, m)
        ``m`` is a non-negative integer (default 0).
    """

    def __init__(self, d: int, terms: Sequence[tuple]):
        super().__init__(d)
        cleaned = []
        for t in terms:
            c, beta, m = (tuple(t) + (0,))[:3]
            if int(m) != m or m < 0:
                raise ValueError("log power must be a non-negative integer")
            if c != 0.0:
                cleaned.append((float(c), float(beta), int(m)))
        self.terms = tuple(cleaned)
        sing = "none"
        for c, beta, m in self.terms:
            if beta < 0:
                sing = "power"
            elif beta == 0 and m > 0 and sing == "none":
                sing = "log"
        self.singularity = sing

    def __repr__(self):
        return f"PowerSum(d={self.d}, terms={list(self.terms)})"

    @staticmethod
    def _logpow(L, m):
        return np.ones_like(L) if m == 0 else L**m

    def _eval(self, r, order):
        with np.errstate(divide="ignore", invalid="ignore"):
            L = np.log(r)
            out = np.zeros_like(r)
            for c, beta, m in self.terms:
                if order == 0:
                    coeffs = [(0, 1.0)]
                elif order == 1:
                    coeffs = [(0, beta), (1, m)]
                else:
                    coeffs = [(0, beta * (beta - 1)), (1, m * (2 * beta - 1)), (2, m * (m - 1))]
                acc = np.zeros_like(r)
                for drop, w in coeffs:
                    if w != 0.0 and m - drop >= 0:
                        acc = acc + w * self._logpow(L, m - drop)
                p = beta - order
                if p == 0:
                    base = np.ones_like(r)
                else:
                    base = np.where(r == 0, 0.0 if p > 0 else np.inf, r**p)
                if m > 0 and beta - order > 0:
                    acc = np.where(r == 0, 0.0, acc)
                out = out + c * np.where(acc == 0, 0.0, base * acc)
            return out

    def _value(self, r):
        return self._eval(r, 0)

    def _d1(self, r):
        return self._eval(r, 1)

    def _d2(self, r):
        return self._eval(r, 2)

    def _moment(self, k: int) -> float:
        n = 2 * k + self.d - 1
        total = 0.0
        for c, beta, m in self.terms:
            p = beta + n + 1
            if p <= 0:
                raise DivergenceError(f"r^{beta} is not integrable against r^{n}")
            total += c * (-1) ** m * math.factorial(m) / p ** (m + 1)
        return total

    def _laplacian(self) -> "PowerSum":
        d = self.d
        out = []
        for c, beta, m in self.terms:
            out.append((c * beta * (beta + d - 2), beta - 2, m))
            if m >= 1:
                out.append((c * m * (2 * beta + d - 2), beta - 2, m - 1))
            if m >= 2:
                out.append((c * m * (m - 1), beta - 2, m - 2))
        return PowerSum(d, _merge_terms(out))

    def _apply_td(self) -> "RadialProfile":
        d = self.d
        out = []
        for c, beta, m in self.terms:
            if beta + d <= 0:
                raise DivergenceError(f"r^{beta} is not integrable on the ball in d={d}")
            if m == 0:
                if beta == -2:
                    out.append((-c / (d - 2), 0.0, 1))
                else:
                    q = (beta + d) * (beta + 2)
                    out += [(c / q, 0.0, 0), (-c / q, beta + 2, 0)]
            elif m == 1 and beta != -2:
                q = (beta + 2) * (beta + d)
                A = -1.0 / q
                B = -A * (2 * beta + d + 2) / q
                out += [(c * A, beta + 2, 1), (c * B, beta + 2, 0), (-c * B, 0.0, 0)]
            else:
                return TdProfile(self)
        return PowerSum(d, _merge_terms(out))


def _merge_terms(terms):
    acc: dict = {}
    for c, beta, m in terms:
        key = (round(beta, 14), m)
        acc[key] = acc.get(key, 0.0) + c
    return [(c, b, m) for (b, m), c in sorted(acc.items()) if c != 0.0]


def Constant(d: int, c: float = 1.0) -> PowerSum:
    """Constant profile."""
    return PowerSum(d, [(float(c), 0.0, 0)])


def example_parameters(d: int, mu: float, nu: float) -> dict:
    """Derived constants of the example family: ``nu_d``, ``alpha``, scale."""
    if mu <= 0 or nu < 0:
        raise ValueError("example family needs mu > 0 and nu >= 0")
    nud = (d - 2) / 2.0
    if nu + nud == 0:
        raise DegenerateFamilyError("d=2 with nu=0 is a degenerate conductivity")
    return {"nu_d": nud, "alpha": (mu - nu) / (mu + nu), "scale": 1.0 / (nu + nud)}


class ExampleConductivity(RadialProfile):
    """Closed-form conductivity ``rho**2`` of the two-parameter example family.

    ``rho(r) = (2 mu / (1 + alpha r^(2 mu)) + nu_d - mu) / (nu + nu_d)`` with
    ``alpha = (mu - nu) / (mu + nu)``, so that ``rho(1) = 1``.
    """

    def __init__(self, d: int, mu: float, nu: float):
        super().__init__(d)
        p = example_parameters(d, mu, nu)
        self.mu, self.nu = float(mu), float(nu)
        self.alpha, self.scale, self._nud = p["alpha"], p["scale"], p["nu_d"]

    def __repr__(self):
        return f"ExampleConductivity(d={self.d}, mu={self.mu}, nu={self.nu})"

    def rho(self, r, order=0):
        mu, al, c = self.mu, self.alpha, self.scale
        r = np.asarray(r, dtype=float)
        x = al * r ** (2 * mu)
        if order == 0:
            return c * (2 * mu / (1 + x) + self._nud - mu)
        if al == 0.0:
            return np.zeros_like(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            if order == 1:
                return -4 * c * mu * mu * al * r ** (2 * mu - 1) / (1 + x) ** 2
            pre = -4 * c * mu * mu * al * r ** (2 * mu - 2)
            return pre * ((2 * mu - 1) / (1 + x) ** 2 - 4 * mu * x / (1 + x) ** 3)

    def _value(self, r):
        return self.rho(r) ** 2

    def _d1(self, r):
        return 2 * self.rho(r) * self.rho(r, 1)

    def _d2(self, r):
        return 2 * self.rho(r, 1) ** 2 + 2 * self.rho(r) * self.rho(r, 2)

    def born(self) -> PowerSum:
        """Closed-form Born approximation of this conductivity."""
        mu, nu, nud = self.mu, self.nu, self._nud
        if nu > 0:
            C = (nu * nu - mu * mu) / (nu * (nu + nud))
            return PowerSum(self.d, [(1.0 - C, 0.0), (C, 2 * nu)])
        return PowerSum(self.d, [(1.0, 0.0), (-2 * mu * mu / nud, 0.0, 1)])

    def potential(self) -> "ExamplePotential":
        return ExamplePotential(self.d, self.mu, self.nu)

    def spectrum(self, k_max: int) -> np.ndarray:
        """Closed-form DtN eigenvalues ``lambda_0..lambda_kmax``."""
        k = np.arange(k_max + 1, dtype=float)
        mu, nu, nud = self.mu, self.nu, self._nud
        return k + k * (mu * mu - nu * nu) / ((nu + nud) * (k + nu + nud))


class ExamplePotential(RadialProfile):
    """``V = Delta(sqrt(gamma)) / sqrt(gamma)`` for the example family."""

    def __init__(self, d: int, mu: float, nu: float):
        super().__init__(d)
        self.mu, self.nu = float(mu), float(nu)
        self.alpha = (mu - nu) / (mu + nu)
        if mu < 1 and self.alpha != 0:
            self.singularity = "power"

    def __repr__(self):
        return f"ExamplePotential(d={self.d}, mu={self.mu}, nu={self.nu})"

    def _value(self, r):
        mu, al = self.mu, self.alpha
        x = al * r ** (2 * mu)
        return -8 * mu * mu * al * r ** (2 * (mu - 1)) / (1 + x) ** 2

    def _d1(self, r):
        mu, al = self.mu, self.alpha
        x = al * r ** (2 * mu)
        e = 2 * (mu - 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            lead = np.where(r == 0, 0.0, e * r ** (e - 1)) if e != 0 else np.zeros_like(r)
            dx = 2 * mu * al * r ** (2 * mu - 1)
            return -8 * mu * mu * al * (lead / (1 + x) ** 2 - 2 * r**e * dx / (1 + x) ** 3)

    def _d2(self, r):
        return _fd2(self._d1, r)


def _fd2(d1, r, h=1e-6):
    lo = np.clip(r - h, 0.0, 1.0)
    hi = np.clip(r + h, 0.0, 1.0)
    return (d1(hi) - d1(lo)) / (hi - lo)


# sampled and piecewise ---------------------------------------------------------


class SampledProfile(RadialProfile):
    """Profile known on nodes ``0 < r_1 < ... < r_n = 1``.

    Interpolated by a cubic spline (not-a-knot ends); below ``r_1`` the
    boundary cubic is extrapolated. Traces at ``r = 1`` use the cubic
    through the last four nodes.
    """

    interpolation_order = 3

    def __init__(self, d: int, r, values):
        super().__init__(d)
        r = np.asarray(r, dtype=float)
        v = np.asarray(values, dtype=float)
        if r.ndim != 1 or r.shape != v.shape:
            raise ValueError("nodes and values must be matching 1-D arrays")
        if r.size < 5:
            raise InsufficientDataError("sampled profile needs at least 5 nodes")
        if np.any(np.diff(r) <= 0) or r[0] < 0 or abs(r[-1] - 1.0) > 1e-12:
            raise ValueError("nodes must increase strictly inside [0, 1] and end at 1")
        if not np.all(np.isfinite(v)):
            raise ValueError("sample values must be finite")
        self.nodes, self.values = r, v
        self._spline = interpolate.CubicSpline(r, v)
        self._s1 = self._spline.derivative(1)
        self._s2 = self._spline.derivative(2)

    def __repr__(self):
        return f"SampledProfile(d={self.d}, n={self.nodes.size})"

    def _value(self, r):
        return self._spline(r)

    def _d1(self, r):
        return self._s1(r)

    def _d2(self, r):
        return self._s2(r)

    def boundary_slope(self) -> float:
        """Slope at ``r = 1`` from the cubic through the last four nodes."""
        rr, vv = self.nodes[-4:], self.values[-4:]
        coef = np.polyfit(rr - 1.0, vv, 3)
        return float(coef[-2])


class PiecewisePolynomial(RadialProfile):
    """Polynomial in ``r`` on each interval of ``breaks``.

    ``coeffs[i]`` holds ascending power coefficients valid on
    ``[breaks[i], breaks[i+1]]``.
    """

    def __init__(self, d: int, breaks, coeffs):
        super().__init__(d)
        b = np.asarray(breaks, dtype=float)
        if b.ndim != 1 or b.size < 2 or b[0] != 0.0 or b[-1] != 1.0 or np.any(np.diff(b) <= 0):
            raise ValueError("breaks must increase from 0 to 1")
        if len(coeffs) != b.size - 1:
            raise ValueError("need one coefficient list per interval")
        self.breaks = b
        self.polys = [np.polynomial.Polynomial(np.asarray(c, dtype=float)) for c in coeffs]
        self.breakpoints = tuple(b[1:-1])

    def __repr__(self):
        return f"PiecewisePolynomial(d={self.d}, pieces={len(self.polys)})"

    def _piece(self, r, order):
        idx = np.clip(np.searchsorted(self.breaks, r, side="right") - 1, 0, len(self.polys) - 1)
        out = np.empty_like(r)
        for i, p in enumerate(self.polys):
            sel = idx == i
            if np.any(sel):
                out[sel] = p.deriv(order)(r[sel]) if order else p(r[sel])
        return out

    def _value(self, r):
        return self._piece(np.atleast_1d(r), 0).reshape(np.shape(r))

    def _d1(self, r):
        return self._piece(np.atleast_1d(r), 1).reshape(np.shape(r))

    def _d2(self, r):
        return self._piece(np.atleast_1d(r), 2).reshape(np.shape(r))

    def _moment(self, k: int) -> float:
        n = 2 * k + self.d - 1
        shift = np.polynomial.Polynomial([0.0] * n + [1.0])
        total = 0.0
        for lo, hi, p in zip(self.breaks[:-1], self.breaks[1:], self.polys):
            P = (p * shift).integ()
            total += P(hi) - P(lo)
        return float(total)


# Jacobi expansions -------------------------------------------------------------


@lru_cache(maxsize=64)
def jacobi_rule(n: int, beta: float):
    """Gauss-Jacobi rule for ``int_0^1 f(x) x^beta / 2 dx``: nodes and weights."""
    y, w = special.roots_jacobi(n, 0.0, beta)
    x = 0.5 * (1.0 + y)
    return x, w * 2.0 ** (-beta - 2.0)


def jacobi_basis(n_basis: int, beta: float, x, order: int = 0) -> np.ndarray:
    """Orthonormal shifted Jacobi polynomials in ``x`` and their x-derivatives.

    Row ``n`` is ``p_n`` (or its ``order``-th derivative), orthonormal for
    the weight ``x^beta / 2`` on ``[0, 1]``.
    """
    x = np.asarray(x, dtype=float)
    y = 2.0 * x - 1.0
    out = np.zeros((n_basis,) + x.shape)
    for n in range(n_basis):
        scale = math.sqrt(2.0 * (2 * n + beta + 1))
        if order == 0:
            out[n] = scale * special.eval_jacobi(n, 0.0, beta, y)
        elif order == 1 and n >= 1:
            out[n] = scale * (n + beta + 1) * special.eval_jacobi(n - 1, 1.0, beta + 1, y)
        elif order == 2 and n >= 2:
            out[n] = scale * (n + beta + 1) * (n + beta + 2) * special.eval_jacobi(
                n - 2, 2.0, beta + 2, y)
    return out


class JacobiSeries(RadialProfile):
    """``sum_n c_n p_n(r^2)`` with the orthonormal basis of :func:`jacobi_basis`.

    The weight ``x^(nu_d) / 2`` makes ``sigma_k`` an exact Gauss-Jacobi sum.
    """

    def __init__(self, d: int, coeffs):
        super().__init__(d)
        self.coeffs = np.asarray(coeffs, dtype=float)

    def __repr__(self):
        return f"JacobiSeries(d={self.d}, n={self.coeffs.size})"

    def _px(self, r, order):
        B = jacobi_basis(self.coeffs.size, self.nu_d, np.asarray(r) ** 2, order)
        return np.tensordot(self.coeffs, B, axes=1)

    def _value(self, r):
        return self._px(r, 0)

    def _d1(self, r):
        return 2 * r * self._px(r, 1)

    def _d2(self, r):
        return 2 * self._px(r, 1) + 4 * r * r * self._px(r, 2)

    def _laplacian_value(self, r):
        return 4 * r * r * self._px(r, 2) + 2 * self.d * self._px(r, 1)

    def _moment(self, k: int) -> float:
        x, w = jacobi_rule(max(8, (self.coeffs.size + k) // 2 + 2), self.nu_d)
        B = jacobi_basis(self.coeffs.size, self.nu_d, x)
        return float(np.dot(w * x**k, self.coeffs @ B))

    def _laplacian(self):
        return _JacobiLaplacian(self)


# composites ----------------------------------------------------------------------


class LinearCombination(RadialProfile):
    """``sum_i w_i * u_i`` of profiles sharing the same dimension."""

    def __init__(self, parts):
        parts = [(float(w), p) for w, p in parts]
        flat = []
        for w, p in parts:
            if isinstance(p, LinearCombination):
                flat += [(w * w2, p2) for w2, p2 in p.parts]
            else:
                flat.append((w, p))
        dims = {p.d for _, p in flat}
        if len(dims) != 1:
            raise ValueError("cannot combine profiles of different dimension")
        super().__init__(dims.pop())
        self.parts = tuple(flat)
        flags = {p.singularity for w, p in flat if w != 0.0}
        self.singularity = "power" if "power" in flags else "log" if "log" in flags else "none"
        self.breakpoints = tuple(sorted({b for _, p in flat for b in p.breakpoints}))

    def __repr__(self):
        return "LinearCombination(" + ", ".join(f"{w:g}*{p!r}" for w, p in self.parts) + ")"

    def _value(self, r):
        return sum(w * p._value(r) for w, p in self.parts)

    def _d1(self, r):
        return sum(w * p._d1(r) for w, p in self.parts)

    def _d2(self, r):
        return sum(w * p._d2(r) for w, p in self.parts)

    def _moment(self, k: int) -> float:
        return sum(w * moment_sigma(p, k) for w, p in self.parts if w != 0.0)

    def _laplacian(self):
        return LinearCombination([(w, laplacian_radial(p)) for w, p in self.parts])

    def _apply_td(self):
        return LinearCombination([(w, apply_Td(p)) for w, p in self.parts])


class Product(RadialProfile):
    """Pointwise product of two profiles."""

    def __init__(self, f: RadialProfile, g: RadialProfile):
        if f.d != g.d:
            raise ValueError("cannot multiply profiles of different dimension")
        super().__init__(f.d)
        self.f, self.g = f, g
        flags = {f.singularity, g.singularity}
        self.singularity = "power" if "power" in flags else "log" if "log" in flags else "none"
        self.breakpoints = tuple(sorted(set(f.breakpoints) | set(g.breakpoints)))

    def __repr__(self):
        return f"Product({self.f!r}, {self.g!r})"

    def _value(self, r):
        return self.f._value(r) * self.g._value(r)

    def _d1(self, r):
        return self.f._d1(r) * self.g._value(r) + self.f._value(r) * self.g._d1(r)

    def _d2(self, r):
        f, g = self.f, self.g
        return f._d2(r) * g._value(r) + 2 * f._d1(r) * g._d1(r) + f._value(r) * g._d2(r)


class LaplacianProfile(RadialProfile):
    """``u'' + (d-1) u'/r`` of a twice differentiable profile.

    At ``r = 0`` the regular limit ``d * u''(0)`` is used. Derivatives of the
    result are second-order central differences.
    """

    def __init__(self, u: RadialProfile):
        super().__init__(u.d)
        self.u = u
        self.singularity = "none" if u.singularity == "none" else "power"
        self.breakpoints = u.breakpoints

    def __repr__(self):
        return f"LaplacianProfile({self.u!r})"

    def _value(self, r):
        u = self.u
        if isinstance(u, JacobiSeries):
            return u._laplacian_value(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = u._d2(r) + (self.d - 1) * u._d1(r) / r
        return np.where(r == 0, self.d * u._d2(r), out)

    def _d1(self, r, h=1e-5):
        lo = np.clip(r - h, 0.0, 1.0)
        hi = np.clip(r + h, 0.0, 1.0)
        return (self._value(hi) - self._value(lo)) / (hi - lo)

    def _d2(self, r):
        return _fd2(self._d1, r, 1e-4)


class _JacobiLaplacian(LaplacianProfile):
    # polynomial in x = r^2, so moments are exact Gauss-Jacobi sums
    def _moment(self, k: int) -> float:
        u = self.u
        x, w = jacobi_rule(max(8, (u.coeffs.size + k) // 2 + 2), u.nu_d)
        r = np.sqrt(x)
        return float(np.dot(w * x**k, u._laplacian_value(r)))


class TdProfile(RadialProfile):
    """``T_d f`` for a general profile, via one-dimensional quadrature.

    With ``I(r) = int_0^r f(s) s^(d-1) ds`` the derivatives are exact:
    ``u' = -I / r^(d-1)`` and ``u'' = -f + (d-1) I / r^d``; the value is
    reduced to single integrals by integrating by parts.
    """

    def __init__(self, f: RadialProfile, epsabs: float = 1e-13):
        super().__init__(f.d)
        self.f = f
        self.epsabs = epsabs
        self.singularity = "log" if f.singularity != "none" else "none"
        self.breakpoints = f.breakpoints

    def __repr__(self):
        return f"TdProfile({self.f!r})"

    def _quad(self, g, a, b):
        pts = [p for p in self.f.breakpoints if a < p < b] or None
        val, _ = integrate.quad(g, a, b, points=pts, epsabs=self.epsabs, epsrel=1e-12, limit=400)
        return val

    def _I(self, r):
        d, f = self.d, self.f
        return self._quad(lambda s: f._value(s) * s ** (d - 1), 0.0, r) if r > 0 else 0.0

    def _vec(self, fn, r):
        r = np.asarray(r, dtype=float)
        return np.vectorize(fn, otypes=[float])(r)

    def _value(self, r):
        d, f = self.d, self.f

        def one(x):
            if x >= 1.0:
                return 0.0
            if d == 2:
                if x == 0:
                    return -self._quad(lambda t: f._value(t) * t * math.log(t), 0.0, 1.0)
                tail = self._quad(lambda t: f._value(t) * t * math.log(t), x, 1.0)
                return -self._I(x) * math.log(x) - tail
            tail = self._quad(lambda t: f._value(t) * t, x, 1.0)
            scaled = self._I(x) * x ** (2 - d) if x > 0 else 0.0
            return (self._I(1.0) - scaled) / (2 - d) + tail / (d - 2)

        return self._vec(one, r)

    def _d1(self, r):
        d = self.d
        return self._vec(lambda x: -self._I(x) / x ** (d - 1) if x > 0 else 0.0, r)

    def _d2(self, r):
        d, f = self.d, self.f

        def one(x):
            if x == 0:
                return -float(f._value(np.array(0.0))) / d
            return -float(f._value(np.array(x))) + (d - 1) * self._I(x) / x**d

        return self._vec(one, r)


# operations ----------------------------------------------------------------------


def eval_profile(profile: RadialProfile, r):
    """Evaluate ``profile`` at ``r`` (scalar or array) with domain checks."""
    return profile(r)


def trace_a(profile: RadialProfile) -> float:
    """Boundary value ``u(1)``."""
    return float(profile(1.0))


def trace_b(profile: RadialProfile) -> float:
    """Half the outward radial derivative ``u'(1) / 2``."""
    if isinstance(profile, SampledProfile):
        return 0.5 * profile.boundary_slope()
    return 0.5 * float(profile.derivative(1.0, 1))


def _quad_moment(profile: RadialProfile, n: int, tol: float) -> float:
    def g(r):
        return float(profile._value(np.array(r))) * r**n

    pts = list(profile.breakpoints) or None
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(g, 0.0, 1.0, points=pts, epsabs=tol, epsrel=1e-13, limit=500)
        except integrate.IntegrationWarning as exc:
            if profile.singularity == "none":
                val, _ = integrate.quad(g, 0.0, 1.0, points=pts, epsabs=tol, limit=500)
                return val
            raise DivergenceError(f"moment integral failed to converge: {exc}") from None
    if not math.isfinite(val):
        raise DivergenceError("moment integral is not finite")
    return val


def moment_sigma(profile: RadialProfile, k: int, tol: float = 1e-12) -> float:
    """Radial moment ``sigma_k[h] = int_0^1 h(r) r^(2k+d-1) dr``.

    Closed forms are used for power/log sums, piecewise polynomials and
    Jacobi expansions; other profiles go through adaptive quadrature with
    absolute tolerance ``tol``.

    Raises
    ------
    DivergenceError
        If the integrand is not integrable at the origin.
    """
    if int(k) != k or k < 0:
        raise ValueError("moment index must be a non-negative integer")
    k = int(k)
    hook = getattr(profile, "_moment", None)
    if hook is not None:
        return float(hook(k))
    return _quad_moment(profile, 2 * k + profile.d - 1, tol)


def laplacian_radial(profile: RadialProfile) -> RadialProfile:
    """Radial Laplacian ``u'' + (d-1) u'/r`` as a new profile.

    Power sums are differentiated symbolically; splines and other profiles
    use their own exact second derivatives (cubic spline: order 2 accurate).
    """
    hook = getattr(profile, "_laplacian", None)
    if hook is not None:
        return hook()
    if isinstance(profile, SampledProfile) and profile.nodes.size < 5:
        raise InsufficientDataError("Laplacian of a sampled profile needs 5 nodes")
    return LaplacianProfile(profile)


def apply_Td(profile: RadialProfile) -> RadialProfile:
    """Dirichlet solution operator: ``-Delta(T_d f) = f``, ``T_d f(1) = 0``."""
    hook = getattr(profile, "_apply_td", None)
    if hook is not None:
        return hook()
    if profile.singularity == "power":
        raise DivergenceError("T_d needs an integrable input; split the power terms first")
    return TdProfile(profile)


def _weighted_integral(fn, d, weight, singular, tol=1e-10):
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _ = integrate.quad(lambda r: fn(r) * weight(r), 0.0, 1.0, epsabs=tol,
                                    epsrel=1e-10, limit=500)
        except integrate.IntegrationWarning as exc:
            raise DivergenceError(f"weighted integral does not converge: {exc}") from None
    if not math.isfinite(val):
        raise DivergenceError("weighted integral is not finite")
    return sphere_area(d) * val


def _leading_exponent(profile):
    if isinstance(profile, PowerSum) and profile.terms:
        return min((beta, -m) for _, beta, m in profile.terms)
    if isinstance(profile, LinearCombination):
        lead = [_leading_exponent(p) for w, p in profile.parts if w != 0.0]
        lead = [x for x in lead if x is not None]
        return min(lead) if lead else None
    return None


def norm_dalpha(profile: RadialProfile, alpha: float) -> float:
    """``int_B |f(x)| |x|^(2-d) (1 - log|x|)^alpha dx``.

    Raises
    ------
    DivergenceError
        When the integrand is not integrable at the origin.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    lead = _leading_exponent(profile)
    if lead is not None and lead[0] <= -2:
        raise DivergenceError("non-integrable singularity in the weighted norm")

    def fabs(r):
        return abs(float(profile._value(np.array(r))))

    return _weighted_integral(fabs, profile.d, lambda r: r * (1.0 - math.log(r)) ** alpha
                              if r > 0 else 0.0, profile.singularity != "none")


def norm_sobolev(profile: RadialProfile, order: int, p: float, r_min: float = 0.0,
                 r_max: float = 1.0) -> float:
    """``W^{order,p}`` norm over the ball (or the shell ``r_min < |x| < r_max``).

    The pieces are ``|u|``, ``|u'|`` and the Frobenius norm of the Hessian
    ``sqrt(u''^2 + (d-1) (u'/r)^2)``; for finite ``p`` the result is
    ``(sum_j ||D^j u||_p^p)^(1/p)``, for ``p = inf`` the maximum over
    pieces, taken on a dense grid.
    """
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    d = profile.d

    def pieces(r):
        r = np.asarray(r, dtype=float)
        out = [np.abs(profile._value(r))]
        if order >= 1:
            out.append(np.abs(profile._d1(r)))
        if order >= 2:
            with np.errstate(divide="ignore", invalid="ignore"):
                ratio = np.where(r > 0, profile._d1(r) / r, profile._d2(r))
            out.append(np.sqrt(profile._d2(r) ** 2 + (d - 1) * ratio**2))
        return out

    if math.isinf(p):
        r = np.linspace(max(r_min, 1e-9 if profile.singularity != "none" else 0.0), r_max, 4001)
        vals = pieces(r)
        m = max(float(np.max(v)) for v in vals)
        if not math.isfinite(m):
            raise DivergenceError("profile is unbounded")
        return m
    total = 0.0
    pts = [b for b in profile.breakpoints if r_min < b < r_max] or None
    for j in range(order + 1):
        def g(r, j=j):
            return float(pieces(np.array(r))[j]) ** p * r ** (d - 1)

        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, _ = integrate.quad(g, r_min, r_max, points=pts, epsabs=1e-12,
                                        epsrel=1e-9, limit=500)
            except integrate.IntegrationWarning as exc:
                raise DivergenceError(f"Sobolev norm integral does not converge: {exc}") from None
        total += sphere_area(d) * val
    if not math.isfinite(total):
        raise DivergenceError("Sobolev norm is not finite")
    return total ** (1.0 / p)
