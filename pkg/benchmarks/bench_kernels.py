"""Compare the numba and pure-numpy kernel paths.

Usage::

    python3 benchmarks/bench_kernels.py [--kmax 200] [--repeat 3]

Both paths run on identical inputs; the script reports the best-of-N
wall time per kernel, the speed-up and the largest difference between the
two results.
"""

import argparse
import time

import numpy as np

from radial_born import kernels
from radial_born._accel import HAVE_NUMBA
from radial_born.conductivity import example_family
from radial_born.forward import conductivity_to_potential, potential_to_halfline


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compilation for the numba path)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(k_max):
    spec, _ = example_family(3, 3.0, 1.0)
    gamma = spec.profile
    n = 4 * int(np.ceil(-np.log(1e-6) / 2.5e-4 / 4))
    s = np.linspace(np.log(1e-6), 0.0, n + 1)
    r = np.exp(s)
    g, gs = gamma(r), r * gamma.derivative(r, 1)
    dt = s[1] - s[0]
    ks = np.arange(1, k_max + 1, dtype=float)
    dg = 0.1 * (1 - r * r) ** 2
    dgs = r * (-0.4 * r * (1 - r * r))
    Q = potential_to_halfline(conductivity_to_potential(spec), z_max=k_max + 0.5)
    zs = ks + 0.5
    yield "riccati_deviation", lambda u: kernels.riccati_deviation(g, gs, ks, 3, dt, 1, use_numba=u)
    yield "riccati_difference", lambda u: kernels.riccati_difference(g, gs, dg, dgs, ks, 3, dt, 1,
                                                                     use_numba=u)
    yield "jost_shoot", lambda u: np.concatenate(kernels.jost_shoot(Q.values, zs, Q.dt, 1,
                                                                    use_numba=u))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--kmax", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"numba available: {HAVE_NUMBA}; modes 1..{args.kmax}")
    print(f"{'kernel':20} {'numpy [s]':>10} {'numba [s]':>10} {'speed-up':>9} {'max |diff|':>11}")
    for name, run in cases(args.kmax):
        t_np, y_np = best_of(lambda: run(False), args.repeat)
        if HAVE_NUMBA:
            t_nb, y_nb = best_of(lambda: run(True), args.repeat)
            diff = float(np.max(np.abs(y_nb - y_np)))
            print(f"{name:20} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:9.1f} {diff:11.2e}")
        else:
            print(f"{name:20} {t_np:10.4f} {'-':>10} {'-':>9} {'-':>11}")


if __name__ == "__main__":
    main()
