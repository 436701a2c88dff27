"""Acceptance suite shared by ``radial-born selftest`` and the test-suite.

Each check returns a :class:`CriterionResult` with the measured quantity,
the threshold it is compared against and the wall-clock time.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .born import born_fourier, born_profile
from .conductivity import ConductivitySpec, example_family
from .errors import EllipticityError
from .forward import closed_form_spectrum, spectrum
from .halfline import (
    fit_singular_decomposition,
    halfline_from_spec,
    spectral_report,
    spectral_singular_part,
)
from .inverse import FitProblem, fit_conductivity, locality_test, stability_sweep
from .profiles import (
    Constant,
    ExampleConductivity,
    PiecewisePolynomial,
    PowerSum,
    laplacian_radial,
    moment_sigma,
    sphere_area,
    trace_a,
    trace_b,
)

__all__ = ["CriterionResult", "CRITERIA", "run_criterion", "run_all", "format_table",
           "ROUTE_CASES", "random_conductivity"]

ROUTE_CASES = ((2, 1.0, 3.0), (3, 1.0, 3.0), (2, 3.0, 1.0), (3, 3.0, 1.0), (3, 1.0, 0.0))
BORN_CASES = tuple(c for c in ROUTE_CASES if c[2] > 0)


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    measured: dict
    threshold: str
    seconds: float = 0.0
    notes: list = field(default_factory=list)


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def check_constant(k_max: int = 100, tol: float = 1e-9, budget: float = 5.0) -> CriterionResult:
    worst, slowest = 0.0, 0.0
    for d in (2, 3):
        spec = ConductivitySpec.from_profile(Constant(d))
        for route in ("conductivity-ode", "schrodinger-halfline"):
            sp, dt = _timed(lambda: spectrum(spec, k_max, route))
            worst = max(worst, float(np.max(np.abs(sp.eigenvalues - np.arange(k_max + 1)))))
            slowest = max(slowest, dt)
    ok = worst < tol and slowest < budget
    return CriterionResult(1, "constant conductivity spectrum", ok,
                           {"max_abs_error": worst, "slowest_route_seconds": slowest},
                           f"error < {tol:g}, runtime < {budget:g} s")


def check_routes(k_max: int = 50, agree: float = 1e-7, rel: float = 1e-6) -> CriterionResult:
    worst_agree, worst_rel = 0.0, 0.0
    per_case = {}
    for d, mu, nu in ROUTE_CASES:
        spec, _ = example_family(d, mu, nu)
        l1 = spectrum(spec, k_max, "conductivity-ode").eigenvalues
        l2 = spectrum(spec, k_max, "schrodinger-halfline").eigenvalues
        diff = float(np.max(np.abs(l1 - l2)))
        worst_agree = max(worst_agree, diff)
        entry = {"route_difference": diff}
        if nu > 0:
            cf = closed_form_spectrum(d, mu, nu, k_max)
            r = max(float(np.max(np.abs(l[1:] / cf[1:] - 1))) for l in (l1, l2))
            worst_rel = max(worst_rel, r)
            entry["closed_form_rel"] = r
        per_case[f"{d},{mu:g},{nu:g}"] = entry
    ok = worst_agree < agree and worst_rel < rel
    return CriterionResult(2, "forward route equivalence", ok,
                           {"max_route_difference": worst_agree, "max_closed_form_rel": worst_rel,
                            "cases": per_case},
                           f"routes within {agree:g}, closed form within {rel:g} relative")


def check_born(K: int = 200, tol: float = 1e-3, budget: float = 60.0) -> CriterionResult:
    r = np.linspace(0.05, 1.0, 400)
    worst, slowest, cases = 0.0, 0.0, {}
    for d, mu, nu in BORN_CASES:
        spec, gb = example_family(d, mu, nu)
        bp, dt = _timed(lambda: born_profile(spectrum(spec, K), route="moments"))
        err = float(np.max(np.abs(bp.profile(r) / gb(r) - 1)))
        cases[f"{d},{mu:g},{nu:g}"] = {"max_rel_error": err, "seconds": dt}
        worst, slowest = max(worst, err), max(slowest, dt)
    return CriterionResult(3, "Born reconstruction from 200 modes", worst < tol and slowest < budget,
                           {"max_rel_error": worst, "slowest_case_seconds": slowest, "cases": cases},
                           f"rel error < {tol:g} on [0.05, 1], runtime < {budget:g} s")


def check_resonance(tol: float = 0.02) -> CriterionResult:
    d, mu, nu = 3, 1.0, 0.0
    spec, _ = example_family(d, mu, nu)
    expected = 2 * mu * mu / ((d - 2) / 2)
    rep = spectral_report(halfline_from_spec(spec), d)
    residue = spectral_singular_part(rep, trace_a(spec.profile), d)
    bp = born_profile(spectrum(spec, 200), singular=residue)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        fit = fit_singular_decomposition(bp.profile, rep)
    rel_res = abs(residue.c0 / expected - 1)
    rel_fit = abs(fit.c0 / expected - 1)
    ok = rep.resonance and rel_res < tol and rel_fit < tol
    return CriterionResult(4, "zero resonance and log coefficient", ok,
                           {"resonance": rep.resonance, "jost_at_zero": rep.jost_at_zero,
                            "c0_residue": residue.c0, "c0_fit": fit.c0, "expected": expected},
                           f"resonance flagged, c0 within {tol:.0%} of {expected:g}")


def check_traces(K: int = 200, tol_rec: float = 1e-3, tol_cf: float = 1e-8) -> CriterionResult:
    worst_rec, worst_cf = 0.0, 0.0
    for d, mu, nu in ROUTE_CASES:
        spec, gb = example_family(d, mu, nu)
        a, b = trace_a(spec.profile), trace_b(spec.profile)
        worst_cf = max(worst_cf, abs(trace_a(gb) - a), abs(trace_b(gb) - b))
        if nu > 0:
            bp = born_profile(spectrum(spec, K))
            worst_rec = max(worst_rec, abs(trace_a(bp.profile) - a), abs(trace_b(bp.profile) - b))
    ok = worst_rec < tol_rec and worst_cf < tol_cf
    return CriterionResult(5, "boundary trace identities", ok,
                           {"reconstructed_max": worst_rec, "closed_form_max": worst_cf},
                           f"reconstructed < {tol_rec:g}, closed form < {tol_cf:g}")


def _poly_profiles():
    yield PowerSum(3, [(1.0, 2.0)])
    yield PowerSum(2, [(1.0, 0.0), (-0.5, 1.0), (2.0, 3.0), (0.25, 6.0)])
    yield PowerSum(3, [(3.0, 0.0), (1.0, 2.0), (-4.0, 5.0)])
    yield PowerSum(4, [(0.5, 1.0), (1.5, 4.0), (-1.0, 7.0)])
    yield PiecewisePolynomial(3, [0.0, 1.0], [[2.0, 0.0, -1.0, 0.5, 0.0, 0.2]])


def check_moments(k_max: int = 20, tol: float = 1e-9, tol_pair: float = 1e-8) -> CriterionResult:
    worst = 0.0
    for u in _poly_profiles():
        d = u.d
        a, b = trace_a(u), trace_b(u)
        lap = laplacian_radial(u)
        worst = max(worst, abs(moment_sigma(lap, 0) - 2 * b))
        for k in range(1, k_max + 1):
            rhs = 2 * b - 2 * k * a + 2 * k * (2 * k + d - 2) * moment_sigma(u, k - 1)
            worst = max(worst, abs(moment_sigma(lap, k) - rhs) / max(1.0, abs(rhs)))
    worst_pair = 0.0
    for d, mu, nu in ROUTE_CASES:
        spec, gb = example_family(d, mu, nu)
        lam = closed_form_spectrum(d, mu, nu, k_max + 1)
        a, b = trace_a(spec.profile), trace_b(spec.profile)
        lap = laplacian_radial(gb)
        nud = (d - 2) / 2
        for k in range(k_max + 1):
            mom = lam[k + 1] / (2 * (k + 1) * (k + 1 + nud))
            worst_pair = max(worst_pair, abs(moment_sigma(gb, k) - mom))
            worst_pair = max(worst_pair, abs(a * k - b + 0.5 * moment_sigma(lap, k) - lam[k]))
    ok = worst < tol and worst_pair < tol_pair
    return CriterionResult(6, "moment identities", ok,
                           {"laplacian_moment_max": worst, "closed_form_pair_max": worst_pair},
                           f"Laplacian moments < {tol:g}, spectral pairs < {tol_pair:g}")


def random_conductivity(rng: np.random.Generator, d: int, near_resonant: bool = False,
                        K: float = 4.0) -> ConductivitySpec:
    """Smooth perturbation of an example-family conductivity with ellipticity bound ``K``.

    The family member is multiplied by ``1 + eps (1 - r^2)^2 (1 + c r^2)``;
    draws outside ``[1/K, K]`` are rejected. ``near_resonant`` (``d >= 3``)
    fixes ``nu = 0`` and ``eps > 0``, which tends to create bound states.
    """
    while True:
        if d == 2:
            mu, nu = rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0)
        else:
            mu = rng.uniform(0.2, 1.2)
            nu = 0.0 if near_resonant else rng.uniform(0.0, 1.5)
        eps = rng.uniform(0.02, 0.5) if near_resonant else rng.uniform(-0.5, 0.5)
        c = rng.uniform(-1.0, 1.0)
        pert = PowerSum(d, [(1 + eps, 0.0), (eps * (c - 2), 2.0), (eps * (1 - 2 * c), 4.0),
                            (eps * c, 6.0)])
        try:
            return ConductivitySpec(d, ExampleConductivity(d, float(mu), float(nu)) * pert, K=K)
        except EllipticityError:
            continue


def check_containment(n: int = 50, seed: int = 20240601) -> CriterionResult:
    rng = np.random.default_rng(seed)
    violations, bound_states, resonances = [], 0, 0
    for i in range(n):
        d = 3 if i % 2 else 2
        spec = random_conductivity(rng, d, near_resonant=(d == 3 and i % 4 == 1))
        nud = (d - 2) / 2
        rep = spectral_report(halfline_from_spec(spec), d, z_max=nud + 0.7, amplitudes=False)
        bound_states += len(rep.kappas)
        bad = [k for k in rep.kappas if not 0 < k < nud]
        if d == 2 and rep.resonance:
            resonances += 1
            bad.append(0.0)
        if bad:
            violations.append({"index": i, "d": d, "offending": bad})
    return CriterionResult(7, "spectrum containment on random conductivities", not violations,
                           {"samples": n, "seed": seed, "violations": violations,
                            "bound_states_found": bound_states, "d2_resonances": resonances},
                           "zero violations")


def _bump(d, s, amp):
    return PiecewisePolynomial(d, [0.0, s, 1.0], [[amp * s**4, 0.0, -2 * amp * s**2, 0.0, amp],
                                                  [0.0]])


def check_locality(s: float = 0.5, tol: float = 0.05) -> CriterionResult:
    d = 3
    one = ConductivitySpec.from_profile(Constant(d))
    bump = _bump(d, s, 8.0)
    inner = locality_test(one, ConductivitySpec.from_profile(Constant(d) + bump), s,
                          (10, 40), tol, difference=bump)
    edge = PowerSum(d, [(0.5, 0.0), (-1.0, 2.0), (0.5, 4.0)])
    control = locality_test(one, ConductivitySpec.from_profile(Constant(d) + edge), s,
                            (10, 40), tol, difference=edge)
    ok = inner.passed and not control.passed
    return CriterionResult(8, "locality decay rate", ok,
                           {"rate": inner.rate, "log_s": inner.log_s,
                            "rel_deviation": inner.rel_deviation,
                            "control_rate": control.rate,
                            "control_rel_deviation": control.rel_deviation},
                           f"rate within {tol:.0%} of log s, control outside")


def check_inversion(tol: float = 1e-3, rank: float = 0.95) -> CriterionResult:
    d, mu, nu = 3, 1.0, 3.0
    spec, _ = example_family(d, mu, nu)
    bp = born_profile(spectrum(spec, 200))
    fit = fit_conductivity(FitProblem(d, bp, space="family:example"))
    err = max(abs(fit.params["mu"] - mu), abs(fit.params["nu"] - nu))
    base = ConductivitySpec.from_profile(Constant(d), K=3.0)
    pert = PowerSum(d, [(1.0, 0.0), (-2.0, 2.0), (1.0, 4.0)])
    rec = stability_sweep(base, pert, np.logspace(-4, -1, 10))
    ok = err < tol and rec.spearman >= rank
    return CriterionResult(9, "round-trip inversion and stability ranking", ok,
                           {"mu_hat": fit.params["mu"], "nu_hat": fit.params["nu"],
                            "param_error": err, "spearman": rec.spearman,
                            "empirical_exponent": rec.exponent},
                           f"parameters within {tol:g}, rank correlation >= {rank:g}")


def check_fourier(tol0: float = 1e-8, tol_ball: float = 1e-6) -> CriterionResult:
    worst0 = 0.0
    for d, mu, nu in ROUTE_CASES:
        spec, gb = example_family(d, mu, nu)
        sp = spectrum(spec, 60, "closed-form")
        worst0 = max(worst0, abs(born_fourier(sp, 0.0) - sphere_area(d) * moment_sigma(gb, 0)))
    sp = spectrum(ConductivitySpec.from_profile(Constant(3)), 120, "closed-form")
    worst_ball = 0.0
    for rho in np.linspace(0.0, 10.0, 41):
        exact = 4 * math.pi / 3 if rho == 0 else \
            4 * math.pi * (math.sin(rho) - rho * math.cos(rho)) / rho**3
        worst_ball = max(worst_ball, abs(born_fourier(sp, float(rho)) - exact))
    ok = worst0 < tol0 and worst_ball < tol_ball
    return CriterionResult(10, "Fourier and moment consistency", ok,
                           {"zero_frequency_max": worst0, "ball_transform_max": worst_ball},
                           f"zero frequency < {tol0:g}, ball transform < {tol_ball:g}")


CRITERIA = {1: check_constant, 2: check_routes, 3: check_born, 4: check_resonance,
            5: check_traces, 6: check_moments, 7: check_containment, 8: check_locality,
            9: check_inversion, 10: check_fourier}


def run_criterion(number: int) -> CriterionResult:
    t0 = time.perf_counter()
    try:
        res = CRITERIA[number]()
    except Exception as exc:  # a crash counts as a failure, not as an abort of the suite
        res = CriterionResult(number, CRITERIA[number].__name__, False,
                              {"error": f"{type(exc).__name__}: {exc}"}, "completes")
    res.seconds = time.perf_counter() - t0
    return res


def run_all(numbers=None) -> list:
    return [run_criterion(n) for n in (numbers or sorted(CRITERIA))]


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.3e}"
    return str(v)


def format_table(results) -> str:
    lines = [f"{'#':>2}  {'result':6}  {'seconds':>8}  criterion"]
    for r in results:
        flag = "PASS" if r.passed else "FAIL"
        scalars = ", ".join(f"{k}={_fmt(v)}" for k, v in r.measured.items()
                            if not isinstance(v, (dict, list)))
        lines.append(f"{r.number:>2}  {flag:6}  {r.seconds:8.2f}  {r.title} [{r.threshold}] {scalars}")
    n_ok = sum(r.passed for r in results)
    lines.append(f"{n_ok}/{len(results)} criteria passed")
    return "\n".join(lines)
