"""Fixed-step RK4 kernels for the two radial ODE routes.

Both kernels read their coefficient on a uniform fine grid with ``4 n``
intervals. A step of size ``h = 2 * stride * dt`` uses grid samples at the
start, midpoint and end of the step, so stride 1 and stride 2 give two
solutions on the same data (used for Richardson extrapolation).

Two implementations are provided: numba loops (parallel over modes) and
numpy code vectorized over modes. :data:`radial_born._accel.USE_NUMBA`
selects the default.
"""

import numpy as np

from ._accel import USE_NUMBA, njit, prange


@njit(cache=True, parallel=True)
def _riccati_numba(gam, gam_s, ks, d, dt, stride):
    n = (gam.size - 1) // (2 * stride)
    h = 2.0 * stride * dt
    out = np.empty(ks.size)
    for j in prange(ks.size):
        k = ks[j]
        c = 2.0 * k + d - 2.0
        y = 0.0
        if k > 0.0:
            y = -k * gam_s[0] / c
        for i in range(n):
            i0 = 2 * stride * i
            i1 = i0 + stride
            i2 = i0 + 2 * stride
            g0 = gam[i0]
            g1 = gam[i1]
            g2 = gam[i2]
            k1 = -k * gam_s[i0] - c * y - y * y / g0
            yy = y + 0.5 * h * k1
            k2 = -k * gam_s[i1] - c * yy - yy * yy / g1
            yy = y + 0.5 * h * k2
            k3 = -k * gam_s[i1] - c * yy - yy * yy / g1
            yy = y + h * k3
            k4 = -k * gam_s[i2] - c * yy - yy * yy / g2
            y += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        out[j] = y
    return out


def _riccati_numpy(gam, gam_s, ks, d, dt, stride):
    ks = np.asarray(ks, dtype=float)
    n = (gam.size - 1) // (2 * stride)
    h = 2.0 * stride * dt
    c = 2.0 * ks + d - 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.where(ks > 0, -ks * gam_s[0] / np.where(c == 0, 1.0, c), 0.0)
    for i in range(n):
        i0 = 2 * stride * i
        i1 = i0 + stride
        i2 = i0 + 2 * stride
        g0, g1, g2 = gam[i0], gam[i1], gam[i2]
        s0, s1, s2 = gam_s[i0], gam_s[i1], gam_s[i2]
        k1 = -ks * s0 - c * y - y * y / g0
        yy = y + 0.5 * h * k1
        k2 = -ks * s1 - c * yy - yy * yy / g1
        yy = y + 0.5 * h * k2
        k3 = -ks * s1 - c * yy - yy * yy / g1
        yy = y + h * k3
        k4 = -ks * s2 - c * yy - yy * yy / g2
        y = y + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    return y


@njit(cache=True, parallel=True)
def _jost_numba(Q, zs, dt, stride):
    n = (Q.size - 1) // (2 * stride)
    h = -2.0 * stride * dt
    F = np.empty(zs.size)
    D = np.empty(zs.size)
    for j in prange(zs.size):
        z = zs[j]
        p = 1.0
        dp = 0.0
        for i in range(n, 0, -1):
            i0 = 2 * stride * i
            q0 = Q[i0]
            q1 = Q[i0 - stride]
            q2 = Q[i0 - 2 * stride]
            a1 = dp
            b1 = 2.0 * z * dp + q0 * p
            a2 = dp + 0.5 * h * b1
            b2 = 2.0 * z * a2 + q1 * (p + 0.5 * h * a1)
            a3 = dp + 0.5 * h * b2
            b3 = 2.0 * z * a3 + q1 * (p + 0.5 * h * a2)
            a4 = dp + h * b3
            b4 = 2.0 * z * a4 + q2 * (p + h * a3)
            p += h * (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0
            dp += h * (b1 + 2.0 * b2 + 2.0 * b3 + b4) / 6.0
        F[j] = p
        D[j] = dp
    return F, D


def _jost_numpy(Q, zs, dt, stride):
    zs = np.asarray(zs, dtype=float)
    n = (Q.size - 1) // (2 * stride)
    h = -2.0 * stride * dt
    p = np.ones_like(zs)
    dp = np.zeros_like(zs)
    z2 = 2.0 * zs
    for i in range(n, 0, -1):
        i0 = 2 * stride * i
        q0, q1, q2 = Q[i0], Q[i0 - stride], Q[i0 - 2 * stride]
        a1 = dp
        b1 = z2 * dp + q0 * p
        a2 = dp + 0.5 * h * b1
        b2 = z2 * a2 + q1 * (p + 0.5 * h * a1)
        a3 = dp + 0.5 * h * b2
        b3 = z2 * a3 + q1 * (p + 0.5 * h * a2)
        a4 = dp + h * b3
        b4 = z2 * a4 + q2 * (p + h * a3)
        p = p + h * (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0
        dp = dp + h * (b1 + 2.0 * b2 + 2.0 * b3 + b4) / 6.0
    return p, dp


@njit(cache=True)
def _pair_rhs(k, c, ga, dgi, g1si, dgsi, yy, ee):
    gb = ga + dgi
    fy = -k * g1si - c * yy - yy * yy / ga
    fe = -k * dgsi - c * ee + yy * yy * dgi / (ga * gb) - (2.0 * yy * ee + ee * ee) / gb
    return fy, fe


@njit(cache=True, parallel=True)
def _pair_numba(g1, g1s, dg, dgs, ks, d, dt, stride):
    n = (g1.size - 1) // (2 * stride)
    h = 2.0 * stride * dt
    out = np.empty(ks.size)
    for j in prange(ks.size):
        k = ks[j]
        c = 2.0 * k + d - 2.0
        y = 0.0
        e = 0.0
        if k > 0.0:
            y = -k * g1s[0] / c
            e = -k * dgs[0] / c
        for i in range(n):
            i0 = 2 * stride * i
            i1 = i0 + stride
            i2 = i0 + 2 * stride
            a1, b1 = _pair_rhs(k, c, g1[i0], dg[i0], g1s[i0], dgs[i0], y, e)
            a2, b2 = _pair_rhs(k, c, g1[i1], dg[i1], g1s[i1], dgs[i1],
                               y + 0.5 * h * a1, e + 0.5 * h * b1)
            a3, b3 = _pair_rhs(k, c, g1[i1], dg[i1], g1s[i1], dgs[i1],
                               y + 0.5 * h * a2, e + 0.5 * h * b2)
            a4, b4 = _pair_rhs(k, c, g1[i2], dg[i2], g1s[i2], dgs[i2], y + h * a3, e + h * b3)
            y += h * (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0
            e += h * (b1 + 2.0 * b2 + 2.0 * b3 + b4) / 6.0
        out[j] = e
    return out


def _pair_numpy(g1, g1s, dg, dgs, ks, d, dt, stride):
    ks = np.asarray(ks, dtype=float)
    n = (g1.size - 1) // (2 * stride)
    h = 2.0 * stride * dt
    c = 2.0 * ks + d - 2.0
    safe = np.where(c == 0, 1.0, c)
    y = np.where(ks > 0, -ks * g1s[0] / safe, 0.0)
    e = np.where(ks > 0, -ks * dgs[0] / safe, 0.0)

    def rhs(idx, yy, ee):
        ga = g1[idx]
        gb = ga + dg[idx]
        fy = -ks * g1s[idx] - c * yy - yy * yy / ga
        fe = -ks * dgs[idx] - c * ee + yy * yy * dg[idx] / (ga * gb) - (2 * yy * ee + ee * ee) / gb
        return fy, fe

    for i in range(n):
        i0 = 2 * stride * i
        i1 = i0 + stride
        i2 = i0 + 2 * stride
        a1, b1 = rhs(i0, y, e)
        a2, b2 = rhs(i1, y + 0.5 * h * a1, e + 0.5 * h * b1)
        a3, b3 = rhs(i1, y + 0.5 * h * a2, e + 0.5 * h * b2)
        a4, b4 = rhs(i2, y + h * a3, e + h * b3)
        y = y + h * (a1 + 2 * a2 + 2 * a3 + a4) / 6
        e = e + h * (b1 + 2 * b2 + 2 * b3 + b4) / 6
    return e


def riccati_difference(g1, g1s, dg, dgs, ks, d, dt, stride=1, use_numba=None):
    """Difference of two Riccati deviations, integrated directly.

    ``dg = gamma_2 - gamma_1`` (and its ``r d/dr``) is passed explicitly,
    so wherever the conductivities agree the difference obeys a homogeneous
    linear equation and keeps full relative precision. Returns
    ``delta_2(0) - delta_1(0)`` per mode.
    """
    arrs = [np.ascontiguousarray(a, dtype=float) for a in (g1, g1s, dg, dgs)]
    ks = np.ascontiguousarray(np.atleast_1d(ks), dtype=float)
    if (arrs[0].size - 1) % (2 * stride):
        raise ValueError("grid length incompatible with stride")
    fn = _pair_numba if (USE_NUMBA if use_numba is None else use_numba) else _pair_numpy
    return fn(*arrs, ks, float(d), float(dt), int(stride))


def riccati_deviation(gam, gam_s, ks, d, dt, stride=1, use_numba=None):
    """Integrate the log-radius Riccati equation for ``delta = g - k gamma``.

    Parameters
    ----------
    gam, gam_s : ndarray
        Conductivity and ``r d(gamma)/dr`` sampled on a uniform grid in
        ``s = log r`` ending at ``s = 0``.
    ks : array_like
        Mode indices (floats are accepted).
    d : int
        Dimension.
    dt : float
        Fine grid spacing.
    stride : int
        Step multiplier, see module notes.

    Returns
    -------
    ndarray
        ``delta(0)`` for each mode, i.e. ``lambda_k - k gamma(1)``.
    """
    gam = np.ascontiguousarray(gam, dtype=float)
    gam_s = np.ascontiguousarray(gam_s, dtype=float)
    ks = np.ascontiguousarray(np.atleast_1d(ks), dtype=float)
    if (gam.size - 1) % (2 * stride):
        raise ValueError("grid length incompatible with stride")
    if USE_NUMBA if use_numba is None else use_numba:
        return _riccati_numba(gam, gam_s, ks, float(d), float(dt), int(stride))
    return _riccati_numpy(gam, gam_s, ks, float(d), float(dt), int(stride))


def jost_shoot(Q, zs, dt, stride=1, use_numba=None):
    """Shoot the renormalized Jost solution from ``t = T`` back to ``t = 0``.

    Solves ``phi'' = 2 z phi' + Q phi`` with ``phi(T) = 1``, ``phi'(T) = 0``
    where ``Q`` is sampled on a uniform grid over ``[0, T]``.

    Returns
    -------
    F, D : ndarray
        ``phi(0)`` and ``phi'(0)`` for each ``z``.
    """
    Q = np.ascontiguousarray(Q, dtype=float)
    zs = np.ascontiguousarray(np.atleast_1d(zs), dtype=float)
    if (Q.size - 1) % (2 * stride):
        raise ValueError("grid length incompatible with stride")
    if USE_NUMBA if use_numba is None else use_numba:
        return _jost_numba(Q, zs, float(dt), int(stride))
    return _jost_numpy(Q, zs, float(dt), int(stride))
