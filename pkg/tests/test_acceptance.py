"""One pass/fail line per acceptance criterion, at the stated tolerances."""

import pytest

from radial_born.acceptance import run_criterion


def _check(number):
    res = run_criterion(number)
    assert res.passed, f"{res.title} [{res.threshold}]: {res.measured}"


def test_01_constant_conductivity_spectrum():
    _check(1)


def test_02_forward_route_equivalence():
    _check(2)


def test_03_born_reconstruction_from_200_modes():
    _check(3)


def test_04_zero_resonance_log_coefficient():
    _check(4)


def test_05_boundary_trace_identities():
    _check(5)


def test_06_moment_identities():
    _check(6)


@pytest.mark.slow
def test_07_spectrum_containment_random_conductivities():
    _check(7)


def test_08_locality_decay_rate():
    _check(8)


def test_09_round_trip_inversion_and_stability_ranking():
    _check(9)


def test_10_fourier_moment_consistency():
    _check(10)
