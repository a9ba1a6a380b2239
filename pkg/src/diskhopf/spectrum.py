"""Per-mode characteristic quasipolynomials, Hopf points and parameter sweeps."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bessel_basis import EigenMode, eigen_table, mode_of
from .model import find_equilibrium, taylor_expand

TIE_TOL = 1e-8


def mean_mode_coupled(mode, nonlocal_all_0m=False):
    """Whether c11 (the disk-mean Jacobian entry) acts on this mode."""
    if mode.n != 0:
        return False
    return mode.m == 0 or nonlocal_all_0m


@dataclass
class CharFunction:
    """det[g I + lam D - A - B e^{-g tau}] = p(g) + q(g) e^{-g tau}."""
    mode: EigenMode
    p_coeffs: np.ndarray
    q_coeffs: np.ndarray
    tau: float = 0.0

    def p(self, g):
        return np.polyval(self.p_coeffs, g)

    def q(self, g):
        return np.polyval(self.q_coeffs, g)

    def dp(self, g):
        return np.polyval(np.polyder(self.p_coeffs), g)

    def dq(self, g):
        return np.polyval(np.polyder(self.q_coeffs), g) if len(self.q_coeffs) > 1 else 0.0 * g

    def __call__(self, g, tau=None):
        tau = self.tau if tau is None else tau
        return self.p(g) + self.q(g) * np.exp(-g * tau)


def char_function(td, mode, tau=0.0, nonlocal_all_0m=False):
    if td.b[0, 0] != 0 or td.b[0, 1] != 0:
        raise ValueError("delay must enter the second equation only")
    A = td.A(mean_mode_coupled(mode, nonlocal_all_0m))
    lam = mode.lam
    d1, d2 = td.D[0, 0], td.D[1, 1]
    m11 = d1 * lam - A[0, 0]
    m22 = d2 * lam - A[1, 1]
    # p = (g + m11)(g + m22) - a12 a21
    p = np.array([1.0, m11 + m22, m11 * m22 - A[0, 1] * A[1, 0]])
    # q collects the B terms: -(b22 (g + m11) + a12 b21)
    b21, b22 = td.b[1, 0], td.b[1, 1]
    q = np.array([-b22, -(b22 * m11 + A[0, 1] * b21)])
    return CharFunction(mode, p, q, tau)


def char_residual(td, mode, tau, gamma, nonlocal_all_0m=False):
    A = td.A(mean_mode_coupled(mode, nonlocal_all_0m))
    M = gamma * np.eye(2) + mode.lam * td.D - A - td.b * np.exp(-gamma * tau)
    return complex(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0])


@dataclass
class HopfPoint:
    mode: EigenMode
    omega: float
    tau_hat: float
    branch: int
    double: bool
    transversal: int
    dgamma_dtau: complex = 0j
    residual: float = 0.0
    tie: bool = False

    @property
    def phase(self):
        return self.omega * self.tau_hat


def omega_scan_max(td, mode):
    scale = np.max(np.abs(td.a)) + np.max(np.abs(td.b)) + abs(td.c11) + mode.lam * np.max(np.diag(td.D))
    return 10.0 * max(scale, 1e-3)


def _polish(cf, w, t, tol=1e-12):
    for _ in range(50):
        g = 1j * w
        e = np.exp(-g * t)
        r = cf.p(g) + cf.q(g) * e
        dw = 1j * (cf.dp(g) + cf.dq(g) * e) - 1j * t * cf.q(g) * e
        dt = -g * cf.q(g) * e
        J = np.array([[dw.real, dt.real], [dw.imag, dt.imag]])
        step = np.linalg.solve(J, -np.array([r.real, r.imag]))
        w += step[0]
        t += step[1]
        if abs(step[0]) < tol * max(1.0, abs(w)) and abs(step[1]) < tol * max(1.0, abs(t)):
            break
    return w, t


def dgamma_dtau(cf, omega, tau):
    g = 1j * omega
    e = np.exp(-g * tau)
    return complex(g * cf.q(g) * e / (cf.dp(g) + cf.dq(g) * e - tau * cf.q(g) * e))


def crossing_frequencies(cf, w_max, n_scan=20000):
    """Positive roots of |p(iw)|^2 - |q(iw)|^2 by scanning and bisection."""
    f = lambda w: abs(cf.p(1j * w)) ** 2 - abs(cf.q(1j * w)) ** 2
    ws = np.linspace(0.0, w_max, n_scan + 1)[1:]
    vals = np.abs(cf.p(1j * ws)) ** 2 - np.abs(cf.q(1j * ws)) ** 2
    roots = [float(w) for w in ws[:-1][vals[:-1] == 0.0]]
    for i in np.flatnonzero((vals[:-1] != 0.0) & ((vals[:-1] < 0) != (vals[1:] < 0))):
        a, b, fa = ws[i], ws[i + 1], vals[i]
        for _ in range(200):
            c = 0.5 * (a + b)
            fc = f(c)
            if (fc < 0) == (fa < 0):
                a, fa = c, fc
            else:
                b = c
            if b - a < 1e-15 * max(1.0, b):
                break
        roots.append(0.5 * (a + b))
    return sorted(roots)


def hopf_points(td, mode, tau_max, nonlocal_all_0m=False, n_scan=20000):
    """All (omega, tau_j) pairs with tau_j in (0, tau_max] for one mode, sorted by tau."""
    cf = char_function(td, mode, 0.0, nonlocal_all_0m)
    if np.all(cf.q_coeffs == 0):
        return []
    out = []
    for w in crossing_frequencies(cf, omega_scan_max(td, mode), n_scan):
        g = 1j * w
        # e^{-i w tau} = -p/q
        base = (-np.angle(-cf.p(g) / cf.q(g))) % (2 * np.pi)
        j = 0
        while True:
            t = (base + 2 * np.pi * j) / w
            if t > tau_max:
                break
            if t > 0:
                wp, tp = _polish(cf, w, t)
                dg = dgamma_dtau(cf, wp, tp)
                res = abs(char_residual(td, mode, tp, 1j * wp, nonlocal_all_0m))
                out.append(HopfPoint(mode, wp, tp, j, mode.multiplicity == 2,
                                     int(np.sign(dg.real)), dg, res))
            j += 1
    out.sort(key=lambda h: h.tau_hat)
    return out


def candidate_modes(n_max, m_max, R):
    return eigen_table(n_max, m_max, R)


def min_hopf(td, n_max, m_max, tau_max, R, nonlocal_all_0m=False):
    """Hopf point with the smallest critical delay over modes n <= n_max, m <= m_max."""
    if n_max < 1 or m_max < 1:
        raise ValueError("need n_max >= 1 and m_max >= 1")
    best = None
    for mode in candidate_modes(n_max, m_max, R):
        pts = hopf_points(td, mode, tau_max, nonlocal_all_0m)
        if not pts:
            continue
        h = pts[0]
        if best is None or h.tau_hat < best.tau_hat - TIE_TOL:
            best = h
        elif abs(h.tau_hat - best.tau_hat) < TIE_TOL:
            best.tie = True
    if best is None:
        raise RuntimeError("no Hopf point on any scanned mode")
    return best


def count_unstable_roots(td, mode, tau, w_max=None, re_max=5.0, n_points=4000, nonlocal_all_0m=False):
    """Argument-principle count of roots with Re > 0 in [0, re_max] x [-w_max, w_max],
    counted with the mode multiplicity."""
    cf = char_function(td, mode, tau, nonlocal_all_0m)
    w_max = omega_scan_max(td, mode) if w_max is None else w_max
    per = 2 * (re_max + 2 * w_max)
    nv = max(8, int(n_points * 2 * w_max / per))
    nh = max(8, int(n_points * re_max / per))
    edges = [
        re_max + 1j * np.linspace(-w_max, w_max, nv, endpoint=False),
        np.linspace(re_max, 0.0, nh, endpoint=False) + 1j * w_max,
        1j * np.linspace(w_max, -w_max, nv, endpoint=False),
        np.linspace(0.0, re_max, nh, endpoint=False) - 1j * w_max,
    ]
    z = np.concatenate(edges + [edges[0][:1]])
    f = cf(z)
    turns = np.sum(np.angle(f[1:] / f[:-1])) / (2 * np.pi)
    k = int(round(turns))
    if abs(turns - k) > 1e-3:
        raise RuntimeError(f"winding number not integral: {turns}")
    return k * mode.multiplicity


def hopf_for_mode(model, n, m, tau_max, nonlocal_all_0m=False):
    td = taylor_expand(model, find_equilibrium(model))
    pts = hopf_points(td, mode_of(n, m, model.domain_R), tau_max, nonlocal_all_0m)
    return pts[0] if pts else None


def bifurcation_curves(family, values, modes, tau_max=100.0, nonlocal_all_0m=False, refine_tol=1e-10):
    """First critical delay per mode along a one-parameter family.

    Returns (rows, crossings). Each row is (param, [tau0 or nan per mode], ok);
    each crossing is (param, tau, i, j) where curves i and j meet.
    """
    def taus(p):
        model = family(p)
        try:
            td = taylor_expand(model, find_equilibrium(model))
        except (RuntimeError, ValueError):
            return None
        out = []
        for (n, m) in modes:
            pts = hopf_points(td, mode_of(n, m, model.domain_R), tau_max, nonlocal_all_0m)
            out.append(pts[0].tau_hat if pts else math.nan)
        return out

    rows = []
    for p in values:
        t = taus(p)
        rows.append((float(p), t if t is not None else [math.nan] * len(modes), t is not None))
    crossings = []
    for i in range(len(modes)):
        for j in range(i + 1, len(modes)):
            for (p0, t0, ok0), (p1, t1, ok1) in zip(rows[:-1], rows[1:]):
                if not (ok0 and ok1):
                    continue
                d0 = t0[i] - t0[j]
                d1 = t1[i] - t1[j]
                if not (np.isfinite(d0) and np.isfinite(d1)) or (d0 < 0) == (d1 < 0):
                    continue
                a, b = p0, p1
                while b - a > refine_tol:
                    c = 0.5 * (a + b)
                    tc = taus(c)
                    dc = tc[i] - tc[j]
                    if (dc < 0) == (d0 < 0):
                        a, d0 = c, dc
                    else:
                        b = c
                c = 0.5 * (a + b)
                crossings.append((c, taus(c)[i], i, j))
    return rows, crossings
