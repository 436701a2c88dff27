import math
import os
import subprocess
import sys

import numpy as np
import pytest

from radial_born import _accel, kernels
from radial_born.conductivity import example_family
from radial_born.forward import conductivity_to_potential, potential_to_halfline

needs_numba = pytest.mark.skipif(not _accel.HAVE_NUMBA, reason="numba not installed")


@pytest.fixture(scope="module")
def grid():
    spec, _ = example_family(3, 3, 1)
    s = np.linspace(math.log(1e-6), 0, 8001)
    r = np.exp(s)
    g, gs = spec.profile(r), r * spec.profile.derivative(r, 1)
    dg = 0.1 * (1 - r * r) ** 2
    dgs = r * (-0.4 * r * (1 - r * r))
    Q = potential_to_halfline(conductivity_to_potential(spec), z_max=20)
    return {"g": g, "gs": gs, "dg": dg, "dgs": dgs, "dt": s[1] - s[0], "Q": Q,
            "ks": np.arange(1, 21, dtype=float)}


@needs_numba
@pytest.mark.parametrize("stride", [1, 2])
def test_riccati_paths_agree(grid, stride):
    args = (grid["g"], grid["gs"], grid["ks"], 3, grid["dt"], stride)
    a = kernels.riccati_deviation(*args, use_numba=True)
    b = kernels.riccati_deviation(*args, use_numba=False)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-14)


@needs_numba
@pytest.mark.parametrize("stride", [1, 2])
def test_pair_paths_agree(grid, stride):
    args = (grid["g"], grid["gs"], grid["dg"], grid["dgs"], grid["ks"], 3, grid["dt"], stride)
    a = kernels.riccati_difference(*args, use_numba=True)
    b = kernels.riccati_difference(*args, use_numba=False)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-16)


@needs_numba
@pytest.mark.parametrize("stride", [1, 2])
def test_jost_paths_agree(grid, stride):
    Q = grid["Q"]
    zs = grid["ks"] + 0.5
    Fa, Da = kernels.jost_shoot(Q.values, zs, Q.dt, stride, use_numba=True)
    Fb, Db = kernels.jost_shoot(Q.values, zs, Q.dt, stride, use_numba=False)
    assert np.allclose(Fa, Fb, rtol=1e-12) and np.allclose(Da, Db, rtol=1e-12, atol=1e-14)


def test_pair_kernel_with_zero_difference(grid):
    args = (grid["g"], grid["gs"], 0 * grid["dg"], 0 * grid["dgs"], grid["ks"], 3, grid["dt"], 1)
    assert np.all(kernels.riccati_difference(*args, use_numba=False) == 0.0)


def _probe(env_extra, code):
    env = dict(os.environ, **env_extra)
    out = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env,
                         check=True)
    return out.stdout.strip()


SPECTRUM_CODE = (
    "from radial_born import _accel\n"
    "from radial_born.conductivity import example_family\n"
    "from radial_born.forward import spectrum\n"
    "s, _ = example_family(3, 1, 3)\n"
    "print(_accel.USE_NUMBA, repr(spectrum(s, 20).eigenvalues.tolist()))\n"
)


def test_environment_flag_selects_numpy_path():
    flag, lam = _probe({"RADIAL_BORN_NUMBA": "0"}, SPECTRUM_CODE).split(" ", 1)
    assert flag == "False"
    lam = np.array(eval(lam))
    assert lam[1] == pytest.approx(0.492063, abs=1e-6)


@needs_numba
def test_both_paths_give_the_same_spectrum():
    _, lam0 = _probe({"RADIAL_BORN_NUMBA": "0"}, SPECTRUM_CODE).split(" ", 1)
    flag, lam1 = _probe({"RADIAL_BORN_NUMBA": "1"}, SPECTRUM_CODE).split(" ", 1)
    assert flag == "True"
    assert np.allclose(eval(lam0), eval(lam1), rtol=1e-12, atol=1e-14)


@needs_numba
def test_thread_count_from_environment():
    code = "import numba\nfrom radial_born import _accel\nprint(numba.get_num_threads())"
    assert _probe({"RADIAL_BORN_THREADS": "2"}, code) == str(min(2, os.cpu_count() or 1))


def test_set_workers():
    n = _accel.set_workers(1)
    assert n == 1
    _accel.set_workers(_accel.worker_count())


def test_worker_count_ignores_garbage(monkeypatch):
    monkeypatch.setenv("RADIAL_BORN_THREADS", "many")
    assert _accel.worker_count() == (os.cpu_count() or 1)
    monkeypatch.setenv("RADIAL_BORN_THREADS", "3")
    assert _accel.worker_count() == 3
