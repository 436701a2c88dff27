import math

import numpy as np
import pytest

from radial_born.born import (
    amplitude_from_born,
    born_closed_form,
    born_fourier,
    born_moments,
    born_profile,
    estimate_traces,
    vb_moments,
    verify_identity,
)
from radial_born.conductivity import ConductivitySpec, example_family
from radial_born.errors import AccuracyWarning, TruncationError
from radial_born.forward import (
    DtnSpectrum,
    conductivity_to_potential,
    dtn_eigenvalue_schrodinger,
    potential_to_halfline,
    spectrum,
)
from radial_born.profiles import Constant, PowerSum, moment_sigma, sphere_area, trace_a, trace_b


def exact(d, lam):
    return DtnSpectrum(d, np.asarray(lam, dtype=float), "closed-form", 0.0)


def family_spectrum(d, mu, nu, K):
    spec, gb = example_family(d, mu, nu)
    return spec, gb, spectrum(spec, K, "closed-form")


# moments ----------------------------------------------------------------------


@pytest.mark.parametrize("d", [2, 3, 4])
def test_moments_of_constant(d):
    m = born_moments(exact(d, np.arange(31)))
    assert np.allclose(m, 1 / (2 * np.arange(30) + d), rtol=1e-15)


def test_moments_of_scaled_constant():
    m = born_moments(spectrum(ConductivitySpec.from_profile(Constant(3, 4.0)), 20))
    assert np.allclose(m, 4 / (2 * np.arange(20) + 3), rtol=1e-12)


def test_moments_of_example_family():
    _, gb, sp = family_spectrum(3, 1, 3, 20)
    m = born_moments(sp)
    assert m[0] == pytest.approx(sp.eigenvalues[1] / 3, rel=1e-15)
    assert m[0] == pytest.approx(0.164021, abs=1e-6)
    assert np.allclose(m[:10], [moment_sigma(gb, k) for k in range(10)], rtol=1e-12)


def test_moments_need_three_modes():
    with pytest.raises(ValueError):
        born_moments(exact(3, [0.0, 1.0]))


def test_traces_from_asymptotics():
    _, gb, sp = family_spectrum(3, 1, 3, 200)
    a, b = estimate_traces(sp)
    assert a == pytest.approx(1.0, abs=1e-6)
    assert b == pytest.approx(trace_b(gb), abs=1e-5)


# Fourier series -----------------------------------------------------------------


@pytest.mark.parametrize("d", [2, 3, 5])
def test_fourier_at_origin(d):
    _, _, sp = family_spectrum(d, 3, 1, 40)
    g0 = born_fourier(sp, 0.0)
    assert g0 == pytest.approx(math.pi ** (d / 2) * sp.eigenvalues[1] / math.gamma(1 + d / 2),
                               rel=1e-14)
    assert g0 == pytest.approx(sphere_area(d) * born_moments(sp)[0], abs=1e-8)


def test_fourier_at_origin_three_dimensions():
    _, _, sp = family_spectrum(3, 1, 3, 40)
    assert born_fourier(sp, 0.0) == pytest.approx(4 * math.pi / 3 * sp.eigenvalues[1], rel=1e-14)


@pytest.mark.parametrize("rho", [0.1, 1.0, 3.0, 6.5, 10.0])
def test_fourier_of_unit_ball(rho):
    val = born_fourier(exact(3, np.arange(201)), rho)
    ball = 4 * math.pi * (math.sin(rho) - rho * math.cos(rho)) / rho**3
    assert val == pytest.approx(ball, abs=1e-6)


def test_fourier_truncation_error():
    with pytest.raises(TruncationError):
        born_fourier(exact(3, np.arange(21)), 40.0)


def test_fourier_rejects_negative_frequency():
    with pytest.raises(ValueError):
        born_fourier(exact(3, np.arange(21)), -1.0)


# reconstruction ------------------------------------------------------------------


def test_constant_reconstructs_to_one():
    bp = born_profile(exact(3, np.arange(201)))
    assert np.max(np.abs(bp.values - 1.0)) < 1e-7
    assert np.max(np.abs(bp.values[bp.grid >= 0.5] - 1.0)) < 1e-9
    assert np.max(np.abs(bp.vB(np.linspace(0.05, 1, 10)))) < 1e-4


def test_example_reconstruction_matches_closed_form():
    _, gb, sp = family_spectrum(3, 1, 3, 200)
    bp = born_profile(sp)
    r = np.linspace(0.05, 1, 400)
    assert np.max(np.abs(bp(r) - gb(r))) < 1e-3


def test_reconstruction_from_ode_spectrum():
    spec, gb = example_family(3, 1, 3)
    bp = born_profile(spectrum(spec, 200))
    r = np.linspace(0.05, 1, 200)
    assert np.max(np.abs(bp(r) - gb(r))) < 1e-3


def test_reconstruction_reproduces_moments():
    _, _, sp = family_spectrum(3, 3, 1, 80)
    bp = born_profile(sp)
    m = born_moments(sp)
    K = sp.k_max
    got = np.array([moment_sigma(bp.profile, k) for k in range(K // 4 + 1)])
    assert np.max(np.abs(got - m[: K // 4 + 1])) < 1e-6


def test_low_confidence_near_origin():
    bp = born_profile(exact(3, np.arange(60)))
    assert np.all(bp.confidence[bp.grid < 0.02] < bp.confidence[-1])


def test_short_spectrum_warns():
    with pytest.warns(AccuracyWarning):
        born_profile(exact(3, np.arange(11)))


def test_two_dimensional_reconstruction_is_bounded():
    _, gb, sp = family_spectrum(2, 3, 1, 200)
    bp = born_profile(sp)
    r = np.geomspace(1e-4, 1e-2, 20)
    assert np.all(np.isfinite(bp(r))) and np.max(np.abs(bp(r))) < 10
    assert bp.profile.singularity == "none"


def test_fourier_route_is_coarse_but_close():
    _, gb, sp = family_spectrum(3, 1, 3, 200)
    bp = born_profile(sp, route="fourier")
    r = np.linspace(0.2, 0.9, 30)
    assert np.max(np.abs(bp(r) - gb(r))) < 0.1
    assert np.all(bp.confidence <= 0.5)


def test_unknown_reconstruction_route():
    with pytest.raises(ValueError):
        born_profile(exact(3, np.arange(30)), route="magic")


# potential moments and amplitude ---------------------------------------------------


def test_vb_moments_of_zero_potential():
    assert np.all(vb_moments(np.arange(12.0)) == 0.0)


@pytest.mark.parametrize("d,mu,nu", [(3, 1, 3), (2, 3, 1)])
def test_vb_moments_of_family(d, mu, nu):
    spec, gb = example_family(d, mu, nu)
    V = conductivity_to_potential(spec)
    Q = potential_to_halfline(V, z_max=12)
    lam_v = [dtn_eigenvalue_schrodinger(V, k, Q) for k in range(8)]
    nud = (d - 2) / 2
    k = np.arange(8)
    assert np.allclose(vb_moments(lam_v), (nu * nu - mu * mu) / (k + nu + nud), atol=1e-8)
    assert vb_moments(lam_v)[0] == pytest.approx(trace_b(spec.profile) / trace_a(spec.profile),
                                                 abs=1e-8)


def test_amplitude_of_power_potential():
    mu, nu = 1.0, 3.0
    A = amplitude_from_born(PowerSum(3, [(2 * (nu * nu - mu * mu), 2 * nu - 2)]))
    t = np.linspace(0, 5, 11)
    assert np.allclose(A(t), 2 * (nu * nu - mu * mu) * np.exp(-2 * nu * t), rtol=1e-13)


def test_amplitude_of_zero_and_inverse_square():
    assert np.all(amplitude_from_born(PowerSum(3, []))(np.linspace(0, 3, 5)) == 0.0)
    A = amplitude_from_born(PowerSum(3, [(-0.7, -2.0)]))
    assert np.allclose(A(np.linspace(0, 3, 5)), -0.7, rtol=1e-14)


def test_amplitude_rejects_negative_t():
    with pytest.raises(ValueError):
        amplitude_from_born(PowerSum(3, []))(-1.0)


# identity ---------------------------------------------------------------------------


def test_identity_for_constant():
    spec = ConductivitySpec.from_profile(Constant(3))
    rep = verify_identity(spec, born_closed_form(spec))
    assert rep.max_residual < 1e-9
    assert rep.trace_a_residual < 1e-9 and rep.trace_b_residual < 1e-9


@pytest.mark.parametrize("d,mu,nu", [(3, 1, 3), (2, 3, 1), (3, 1, 0)])
def test_identity_for_closed_form_pair(d, mu, nu):
    spec, _ = example_family(d, mu, nu)
    rep = verify_identity(spec, born_closed_form(spec))
    assert rep.max_residual < 1e-8
    assert rep.trace_a_residual < 1e-8 and rep.trace_b_residual < 1e-8


def test_identity_for_reconstruction():
    spec, _, sp = family_spectrum(3, 1, 3, 200)
    rep = verify_identity(spec, born_profile(sp))
    assert rep.max_residual < 1e-4


def test_identity_dimension_mismatch():
    spec, _ = example_family(3, 1, 3)
    other, _ = example_family(2, 1, 3)
    with pytest.raises(ValueError):
        verify_identity(spec, born_closed_form(other))


def test_no_closed_form_for_generic_profile():
    spec = ConductivitySpec.from_profile(PowerSum(3, [(1.0, 0.0), (0.2, 2.0)]))
    with pytest.raises(ValueError):
        born_closed_form(spec)
