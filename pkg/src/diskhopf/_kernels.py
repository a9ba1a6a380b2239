"""Right-hand-side kernels for the polar-grid simulator.

The radial part of the Laplacian, f_rr + f_r / r, uses five-point central
differences on the cell-centred grid. The two ghost rows inside r = 0 are
the first two rings seen through the pole (theta + pi); the two outside
r = R come from the quartic with zero slope at R through the last four
cells. The angular term is a second difference on rows j >= j0; rows below
j0 get it spectrally from the caller. The numba versions compile on first
use; DISKHOPF_NO_NUMBA=1 forces the vectorised numpy versions.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

# ghost values beyond r = R from cells N-1 .. N-4 (quartic, zero slope at R)
G1 = np.array([17.0, 9.0, -5.0, 1.0]) / 22.0
G2 = np.array([-135.0, 265.0, -135.0, 27.0]) / 22.0


def numba_enabled():
    flag = os.environ.get("DISKHOPF_NO_NUMBA", "").strip().lower()
    return numba is not None and flag not in ("1", "true", "yes", "on")


# numpy versions

def extend_rows(f):
    nr, nt = f.shape
    h = nt // 2
    e = np.empty((nr + 4, nt))
    e[2:nr + 2] = f
    e[1] = np.roll(f[0], h)
    e[0] = np.roll(f[1], h)
    outer = f[[nr - 1, nr - 2, nr - 3, nr - 4]]
    e[nr + 2] = G1 @ outer
    e[nr + 3] = G2 @ outer
    return e


def laplacian_np(f, r, dr, dth, j0=0):
    """Radial part everywhere plus the angular second difference on rows j >= j0."""
    nr = f.shape[0]
    e = extend_rows(f)
    m2, m1, c, p1, p2 = e[:nr], e[1:nr + 1], e[2:nr + 2], e[3:nr + 3], e[4:]
    frr = (-p2 + 16.0 * p1 - 30.0 * c + 16.0 * m1 - m2) / (12.0 * dr * dr)
    fr = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * dr)
    out = frr + fr / r[:, None]
    g = f[j0:]
    out[j0:] += (np.roll(g, -1, axis=1) - 2.0 * g + np.roll(g, 1, axis=1)) / (r[j0:, None] * dth) ** 2
    return out


def rhs_brusselator_np(u, v, ud, vd, mean_u, p, r, dr, dth, d1, d2, j0=0):
    a, b, g = p[0], p[1], p[2]
    uuv = u * u * v
    fu = d1 * laplacian_np(u, r, dr, dth, j0) + a - (b + 1.0) * u + uuv
    fv = d2 * laplacian_np(v, r, dr, dth, j0) + b * u - uuv + g * (vd - v)
    return fu, fv


def rhs_predprey_np(u, v, pu, pd, mean_u, p, r, dr, dth, d1, d2, j0=0):
    # pu = u^alpha and pd = u(t - tau)^alpha are supplied by the caller
    b, K, a, d, e = p[0], p[1], p[2], p[3], p[4]
    fu = d1 * laplacian_np(u, r, dr, dth, j0) + b * u * (1.0 - mean_u / K) - a * pu * v
    fv = d2 * laplacian_np(v, r, dr, dth, j0) - d * v + a * e * pd * v
    return fu, fv


# loop versions (compiled by numba when available)

def _laplacian_loop(f, r, dr, dth, j0, g1, g2, out):
    nr, nt = f.shape
    half = nt // 2
    e = np.empty((nr + 4, nt))
    for k in range(nt):
        kk = (k + half) % nt
        e[1, k] = f[0, kk]
        e[0, k] = f[1, kk]
        a1 = f[nr - 1, k]
        a2 = f[nr - 2, k]
        a3 = f[nr - 3, k]
        a4 = f[nr - 4, k]
        e[nr + 2, k] = g1[0] * a1 + g1[1] * a2 + g1[2] * a3 + g1[3] * a4
        e[nr + 3, k] = g2[0] * a1 + g2[1] * a2 + g2[2] * a3 + g2[3] * a4
    for j in range(nr):
        for k in range(nt):
            e[j + 2, k] = f[j, k]
    crr = 1.0 / (12.0 * dr * dr)
    for j in range(nr):
        cr = 1.0 / (12.0 * dr * r[j])
        for k in range(nt):
            m2 = e[j, k]
            m1 = e[j + 1, k]
            c = e[j + 2, k]
            p1 = e[j + 3, k]
            p2 = e[j + 4, k]
            out[j, k] = (crr * (-p2 + 16.0 * p1 - 30.0 * c + 16.0 * m1 - m2)
                         + cr * (-p2 + 8.0 * p1 - 8.0 * m1 + m2))
    for j in range(j0, nr):
        ca = 1.0 / (dth * dth * r[j] * r[j])
        out[j, 0] += ca * (f[j, 1] - 2.0 * f[j, 0] + f[j, nt - 1])
        for k in range(1, nt - 1):
            out[j, k] += ca * (f[j, k + 1] - 2.0 * f[j, k] + f[j, k - 1])
        out[j, nt - 1] += ca * (f[j, 0] - 2.0 * f[j, nt - 1] + f[j, nt - 2])


def _rhs_brusselator_loop(u, v, ud, vd, mean_u, p, r, dr, dth, d1, d2, j0, fu, fv):
    nr, nt = u.shape
    a, b, g = p[0], p[1], p[2]
    _laplacian(u, r, dr, dth, j0, G1, G2, fu)
    _laplacian(v, r, dr, dth, j0, G1, G2, fv)
    for i in range(nr):
        for k in range(nt):
            uu = u[i, k]
            vv = v[i, k]
            uuv = uu * uu * vv
            fu[i, k] = d1 * fu[i, k] + a - (b + 1.0) * uu + uuv
            fv[i, k] = d2 * fv[i, k] + b * uu - uuv + g * (vd[i, k] - vv)


def _rhs_predprey_loop(u, v, pu, pd, mean_u, p, r, dr, dth, d1, d2, j0, fu, fv):
    nr, nt = u.shape
    b, K, a, d, e = p[0], p[1], p[2], p[3], p[4]
    _laplacian(u, r, dr, dth, j0, G1, G2, fu)
    _laplacian(v, r, dr, dth, j0, G1, G2, fv)
    for i in range(nr):
        for k in range(nt):
            uu = u[i, k]
            vv = v[i, k]
            fu[i, k] = d1 * fu[i, k] + b * uu * (1.0 - mean_u / K) - a * pu[i, k] * vv
            fv[i, k] = d2 * fv[i, k] - d * vv + a * e * pd[i, k] * vv


def _axpy_loop(y, k, c, out):
    nr, nt = y.shape
    for i in range(nr):
        for j in range(nt):
            out[i, j] = y[i, j] + c * k[i, j]


def _rk4_loop(y, k1, k2, k3, k4, dt, out):
    nr, nt = y.shape
    h = dt / 6.0
    for i in range(nr):
        for j in range(nt):
            out[i, j] = y[i, j] + h * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])


def _axpy_np(y, k, c, out):
    np.add(y, c * k, out=out)


def _rk4_np(y, k1, k2, k3, k4, dt, out):
    np.add(y, dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), out=out)


def combiners(use_numba=None):
    """(axpy, rk4) helpers used by the stepper: out = y + c k and the RK4 update."""
    use_numba = numba_enabled() if use_numba is None else use_numba
    if not use_numba:
        return _axpy_np, _rk4_np
    c = _jit()
    return c["axpy"], c["rk4"]


_compiled = {}


def _jit():
    if not _compiled:
        lap = numba.njit(cache=False)(_laplacian_loop)
        _compiled["laplacian"] = lap
        _compiled["axpy"] = numba.njit(cache=False)(_axpy_loop)
        _compiled["rk4"] = numba.njit(cache=False)(_rk4_loop)
        for name, fn in (("brusselator", _rhs_brusselator_loop), ("predprey", _rhs_predprey_loop)):
            # rebind the helper name to the compiled Laplacian
            f = type(fn)(fn.__code__, {**fn.__globals__, "_laplacian": lap, "G1": G1, "G2": G2}, fn.__name__)
            _compiled[name] = numba.njit(cache=False)(f)
    return _compiled


def laplacian_loop(f, r, dr, dth, j0=0, use_numba=None):
    """Loop-form counterpart of laplacian_np (compiled when numba is enabled)."""
    use_numba = numba_enabled() if use_numba is None else use_numba
    out = np.empty_like(f)
    fn = _jit()["laplacian"] if use_numba else _laplacian_loop
    fn(np.ascontiguousarray(f, float), r, dr, dth, j0, G1, G2, out)
    return out


NUMPY_KERNELS = {"brusselator": rhs_brusselator_np, "predprey": rhs_predprey_np}

# which delayed components each kernel reads
DELAYED = {"brusselator": (False, True), "predprey": (True, False)}


def _power(x, al):
    return np.power(np.maximum(x, 1e-12), al)


def stored_u(name, p):
    """Map applied to u before it enters the history (and the 'ud' slot).

    The predator-prey kernel only needs u(t - tau)^alpha, so that is what is
    stored and interpolated; the power is then taken once per step.
    """
    if name == "predprey":
        al = p[5]
        return lambda u: _power(u, al)
    return None


def _prepare(name, p):
    # per-stage arrays computed with numpy (vectorised transcendental calls)
    if name == "predprey":
        al = p[5]
        return lambda u, v, ud, vd: (u, v, _power(u, al), ud)
    return lambda u, v, ud, vd: (u, v, ud, vd)


def get_kernel(name, p, use_numba=None):
    """Callable (u, v, ud, vd, mean_u, r, dr, dth, d1, d2, j0) -> (fu, fv).

    ud / vd are the delayed values as stored in the history (see stored_u).
    """
    use_numba = numba_enabled() if use_numba is None else use_numba
    if name not in NUMPY_KERNELS:
        raise KeyError(name)
    prep = _prepare(name, p)
    if not use_numba:
        base = NUMPY_KERNELS[name]

        def call_np(u, v, ud, vd, mean_u, r, dr, dth, d1, d2, j0=0):
            return base(*prep(u, v, ud, vd), mean_u, p, r, dr, dth, d1, d2, j0)
        return call_np
    fn = _jit()[name]

    def call(u, v, ud, vd, mean_u, r, dr, dth, d1, d2, j0=0):
        fu = np.empty_like(u)
        fv = np.empty_like(v)
        fn(*prep(u, v, ud, vd), float(mean_u), p, r, dr, dth, d1, d2, j0, fu, fv)
        return fu, fv
    return call
