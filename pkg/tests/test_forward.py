import numpy as np
import pytest

from radial_born.conductivity import ConductivitySpec, example_family
from radial_born.forward import (
    HalflinePotential,
    closed_form_spectrum,
    conductivity_to_potential,
    dtn_eigenvalue_conductivity,
    dtn_eigenvalue_schrodinger,
    dtn_from_schrodinger,
    linearized_dtn,
    potential_to_halfline,
    spectrum,
    spectrum_difference,
    weyl_m,
)
from radial_born.profiles import Constant, PowerSum, SampledProfile, laplacian_radial

ROUTES = ("conductivity-ode", "schrodinger-halfline")


def zero_halfline(T=12.0, n=48000):
    t = np.linspace(0, T, n + 1)
    return HalflinePotential(t, np.zeros_like(t), T)


# reductions -----------------------------------------------------------------


def test_constant_conductivity_has_zero_potential():
    V = conductivity_to_potential(ConductivitySpec.from_profile(Constant(3, 2.5)))
    assert np.all(V(np.linspace(0, 1, 5)) == 0.0)


def test_example_potential_value():
    spec, _ = example_family(3, 1, 3)
    V = conductivity_to_potential(spec)
    assert V(0.5) == pytest.approx(4 / 0.875**2, rel=1e-13)
    assert V(0.5) == pytest.approx(5.2245, abs=1e-4)


def test_example_potential_matches_finite_difference_oracle():
    spec, _ = example_family(3, 3, 1)
    V = conductivity_to_potential(spec)
    r = np.linspace(0, 1, 4001)
    root = SampledProfile(3, r, np.sqrt(spec.profile(r)))
    x = np.linspace(0.1, 0.9, 9)
    oracle = laplacian_radial(root)(x) / root(x)
    assert np.allclose(V(x), oracle, atol=1e-5)


def test_generic_potential_boundary_value():
    gam = PowerSum(3, [(2.0, 0.0), (-2.0, 2.0), (1.0, 4.0)])  # 1 + (1 - r^2)^2
    V = conductivity_to_potential(ConductivitySpec.from_profile(gam))
    r = np.linspace(0, 1, 2001)
    root = SampledProfile(3, r, np.sqrt(gam(r)))
    assert np.all(np.isfinite(V(r)))
    assert V(1.0) == pytest.approx(float(laplacian_radial(root)(1.0)), abs=1e-4)


def test_zero_potential_gives_zero_halfline():
    Q = potential_to_halfline(PowerSum(3, []))
    assert np.all(Q.values == 0.0) and Q.T >= 12


def test_halfline_of_born_potential():
    mu, nu = 1.0, 3.0
    vb = PowerSum(3, [(2 * (nu * nu - mu * mu), 2 * nu - 2)])
    Q = potential_to_halfline(vb)
    t = Q.t[::1000]
    assert np.allclose(Q(t), 2 * (nu * nu - mu * mu) * np.exp(-2 * nu * t), rtol=1e-12)


def test_halfline_weighted_norm_of_unit_potential():
    Q = potential_to_halfline(Constant(3))
    assert Q.norms[0] == pytest.approx(0.5, abs=1e-8)
    assert Q.norms[0] <= Q.norm_bounds[0] + 1e-12


# Weyl function and single modes -----------------------------------------------


@pytest.mark.parametrize("z", [0.5, 1.5, 7.0])
def test_weyl_function_of_zero_potential(z):
    assert weyl_m(zero_halfline(), z) == pytest.approx(-z, abs=1e-12)


def test_weyl_function_of_example():
    spec, _ = example_family(3, 1, 3)
    V = conductivity_to_potential(spec)
    Q = potential_to_halfline(V, z_max=2)
    lam_v = dtn_eigenvalue_schrodinger(V, 1, Q)
    assert weyl_m(Q, 1.5) == pytest.approx(-(lam_v + 0.5), abs=1e-10)


def test_schrodinger_zero_potential():
    for k in range(6):
        assert dtn_eigenvalue_schrodinger(PowerSum(3, []), k) == pytest.approx(k, abs=1e-12)


def test_conductivity_route_single_mode():
    spec, _ = example_family(3, 1, 3)
    assert dtn_eigenvalue_conductivity(spec, 1) == pytest.approx(1 - 8 / (3.5 * 4.5), abs=1e-7)
    assert dtn_eigenvalue_conductivity(spec, 0) == 0.0


def test_closed_form_value():
    assert closed_form_spectrum(3, 1, 3, 1)[1] == pytest.approx(0.492063, abs=1e-6)


def test_dtn_from_schrodinger():
    assert dtn_from_schrodinger(3.7, 1.0, 0.0, 3) == 3.7
    assert dtn_from_schrodinger(0.25, 2.0, 0.5, 0) == 0.0
    spec = ConductivitySpec.from_profile(Constant(3, 4.0))
    lam = spectrum(spec, 5).eigenvalues
    assert np.allclose(lam, [dtn_from_schrodinger(k, 4.0, 0.0, k) for k in range(6)], atol=1e-12)


def test_linearized_dtn():
    for d in (2, 3, 4):
        for k in range(0, 6):
            assert linearized_dtn(Constant(d), k) == pytest.approx(k, abs=1e-14)
    assert linearized_dtn(PowerSum(2, [(1.0, 2.0)]), 1) == pytest.approx(0.5)
    assert linearized_dtn(PowerSum(3, [(7.0, 3.0)]), 0) == 0.0


# spectra --------------------------------------------------------------------


@pytest.mark.parametrize("route", ROUTES)
def test_constant_spectrum(route):
    sp = spectrum(ConductivitySpec.from_profile(Constant(3)), 5, route)
    assert np.allclose(sp.eigenvalues, np.arange(6), atol=1e-12)


def test_small_spectrum_of_example():
    spec, _ = example_family(3, 1, 3)
    sp = spectrum(spec, 2)
    assert sp.eigenvalues[0] == 0.0
    assert sp.eigenvalues[1] == pytest.approx(0.492063, abs=1e-6)
    assert sp.eigenvalues[2] == pytest.approx(2 - 16 / (3.5 * 5.5), abs=1e-9)


@pytest.mark.parametrize("d,mu,nu", [(2, 1, 3), (3, 3, 1), (4, 2, 0.5), (3, 1, 0)])
def test_routes_agree(d, mu, nu):
    spec, _ = example_family(d, mu, nu)
    a = spectrum(spec, 50, "conductivity-ode")
    b = spectrum(spec, 50, "schrodinger-halfline")
    assert np.max(np.abs(a.eigenvalues - b.eigenvalues)) < 1e-7
    assert np.all(a.err_estimate[1:] < 1e-7)


def test_routes_agree_on_generic_conductivity():
    gam = PowerSum(2, [(1.5, 0.0), (-0.8, 2.0), (0.3, 3.0)])
    spec = ConductivitySpec.from_profile(gam)
    a = spectrum(spec, 50, "conductivity-ode").eigenvalues
    b = spectrum(spec, 50, "schrodinger-halfline").eigenvalues
    assert np.max(np.abs(a - b)) < 1e-7


def test_spectrum_properties():
    gam = PowerSum(3, [(1.2, 0.0), (0.5, 2.0), (-0.4, 4.0)])
    spec = ConductivitySpec.from_profile(gam)
    lam = spectrum(spec, 60).eigenvalues
    k = np.arange(lam.size)
    assert lam[0] == 0.0 and np.all(lam[1:] > 0)
    assert np.all(np.diff(lam[1:]) > 0)
    a, b = float(gam(1.0)), 0.5 * float(gam.derivative(1.0, 1))
    tail = np.abs(lam - a * k + b)[10:]
    assert np.all(np.diff(tail) < 0)
    assert lam[-1] / 60 == pytest.approx(a, rel=0.02)


def test_linearization_consistency():
    d, eps = 3, 1e-4
    h = PowerSum(d, [(1.0, 0.0), (-1.0, 2.0), (0.5, 5.0)])
    spec = ConductivitySpec.from_profile(Constant(d) + eps * h)
    lam = spectrum(spec, 10).eigenvalues
    for k in range(1, 11):
        assert (lam[k] - k) / eps == pytest.approx(linearized_dtn(h, k), abs=10 * eps)


def test_spectrum_difference_matches_direct_difference():
    d = 3
    dg = PowerSum(d, [(0.1, 0.0), (-0.2, 2.0), (0.1, 4.0)])
    s1 = ConductivitySpec.from_profile(Constant(d))
    s2 = ConductivitySpec.from_profile(Constant(d) + dg)
    dl, err = spectrum_difference(s1, s2, 30, difference=dg)
    direct = spectrum(s2, 30).eigenvalues - spectrum(s1, 30).eigenvalues
    assert np.max(np.abs(dl - direct)) < 1e-9
    dl2, _ = spectrum_difference(s1, s2, 30)
    assert np.max(np.abs(dl2 - dl)) < 1e-12


def test_unknown_route():
    with pytest.raises(ValueError):
        spectrum(ConductivitySpec.from_profile(Constant(3)), 5, "magic")
