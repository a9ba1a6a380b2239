"""Bessel functions, Neumann eigenmodes of the disk and the mode integrals.

Everything here is self-contained: J_n is evaluated by a power series for
small arguments and Miller's backward recurrence otherwise, so no external
special-function library is involved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SERIES_MAX_X = 8.0
ROOT_STEP = 0.25


def _bessel_series(n, x):
    # sum_k (-1)^k (x/2)^(n+2k) / (k! (n+k)!), evaluated term by term
    h = 0.5 * x
    term = np.exp(n * np.log(np.where(h > 0, h, 1.0)) - math.lgamma(n + 1))
    if n > 0:
        term = np.where(h > 0, term, 0.0)
    total = term.copy()
    hh = h * h
    for k in range(1, 60):
        term = -term * hh / (k * (n + k))
        total += term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def _bessel_miller(n, x):
    # backward recurrence J_{k-1} = (2k/x) J_k - J_{k+1}, normalised by
    # J_0 + 2 sum J_2k = 1; rescaled on the fly to avoid overflow
    top = max(n, float(np.max(x)))
    start = int(top + 25 + 12 * top ** (1.0 / 3.0))
    start += start % 2
    jp = np.zeros_like(x)
    jc = np.full_like(x, 1e-30)
    norm = np.zeros_like(x)
    out = np.zeros_like(x)
    inv = 2.0 / x
    for k in range(start, 0, -1):
        jm = k * inv * jc - jp
        jp, jc = jc, jm
        if k - 1 == n:
            out = jc.copy()
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * jc
        big = np.abs(jc) > 1e250
        if np.any(big):
            s = np.where(big, 1e-250, 1.0)
            jp *= s
            jc *= s
            norm *= s
            out *= s
    norm += jc
    return out / norm


def bessel_j(n, x):
    """J_n(x) for integer n >= 0 and x >= 0 (scalar or array)."""
    if n < 0:
        raise ValueError("order must be nonnegative")
    xa = np.asarray(x, dtype=float)
    scalar = xa.ndim == 0
    xa = np.atleast_1d(xa)
    if np.any(xa < 0):
        raise ValueError("argument must be nonnegative")
    out = np.empty_like(xa)
    small = xa <= SERIES_MAX_X
    if np.any(small):
        out[small] = _bessel_series(n, xa[small])
    if np.any(~small):
        out[~small] = _bessel_miller(n, xa[~small])
    return float(out[0]) if scalar else out


def bessel_j_prime(n, x):
    """dJ_n/dx via J'_n = (J_{n-1} - J_{n+1})/2, J'_0 = -J_1."""
    if n == 0:
        return -1.0 * bessel_j(1, x)
    return 0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x))


@dataclass(frozen=True)
class EigenMode:
    n: int
    m: int
    alpha: float
    lam: float
    radius: float
    norm_sq: float
    multiplicity: int = field(default=1)

    @property
    def label(self):
        return f"({self.n},{self.m})"


def _norm_sq(n, alpha, R):
    if alpha == 0.0:
        return math.pi * R * R
    return 2.0 * math.pi * (R * R / 2.0) * (1.0 - (n / alpha) ** 2) * bessel_j(n, alpha) ** 2


def make_mode(n, m, alpha, R):
    return EigenMode(n, m, float(alpha), (alpha / R) ** 2, float(R),
                     _norm_sq(n, alpha, R), 1 if n == 0 else 2)


def _bisect_many(f, a, b, fa, tol):
    # all brackets at once; f is vectorised
    a, b, fa = np.array(a, float), np.array(b, float), np.array(fa, float)
    for _ in range(200):
        if a.size == 0 or np.max(b - a) < tol:
            break
        c = 0.5 * (a + b)
        fc = f(c)
        same = np.signbit(fc) == np.signbit(fa)
        a = np.where(same, c, a)
        fa = np.where(same, fc, fa)
        b = np.where(same, b, c)
    return 0.5 * (a + b)


def neumann_roots(n, count, R, root_tol=1e-12):
    """First `count` Neumann modes (roots of J'_n) for angular index n."""
    if count < 1 or R <= 0:
        raise ValueError("need count >= 1 and R > 0")
    modes = []
    if n == 0:
        modes.append(make_mode(0, 0, 0.0, R))
    need = count - len(modes)
    if need == 0:
        return modes
    lo = max(n, 1e-6)
    hi = n + 40 + 10 * count
    xs = np.arange(lo, hi + ROOT_STEP, ROOT_STEP)
    dp = bessel_j_prime(n, xs)
    jv = bessel_j(n, xs)
    flip = np.flatnonzero(np.signbit(dp[:-1]) != np.signbit(dp[1:]))[:need]
    roots = list(_bisect_many(lambda t: bessel_j_prime(n, t), xs[flip], xs[flip + 1], dp[flip], root_tol))
    if len(roots) < need:
        raise RuntimeError(f"only {len(roots)} roots of J'_{n} below search ceiling {hi}")
    # interlacing: exactly one zero of J_n between consecutive roots of J'_n
    for a, b in zip(roots[:-1], roots[1:]):
        mask = (xs > a) & (xs < b)
        seg = np.concatenate(([bessel_j(n, a)], jv[mask], [bessel_j(n, b)]))
        flips = int(np.sum(np.signbit(seg[:-1]) != np.signbit(seg[1:])))
        if flips != 1:
            raise RuntimeError(f"interlacing check failed for n={n} between {a} and {b}")
    start = len(modes)
    for k, a in enumerate(roots):
        modes.append(make_mode(n, start + k if n == 0 else k + 1, a, R))
    return modes


def eigen_table(n_max, m_max, R):
    """All modes with n <= n_max; m runs 0..m_max for n=0, 1..m_max otherwise."""
    out = []
    for n in range(n_max + 1):
        out.extend(neumann_roots(n, m_max + 1 if n == 0 else m_max, R))
    return out


def mode_of(n, m, R):
    if n == 0:
        return neumann_roots(0, m + 1, R)[m]
    return neumann_roots(n, m, R)[m - 1]


def normalized_eigenfunction(mode, r, theta, variant="c"):
    """phi_hat^c = J_n(alpha r/R) e^{i n theta}/||.||; variant 's' is its conjugate."""
    r = np.asarray(r, dtype=float)
    theta = np.asarray(theta, dtype=float)
    radial = bessel_j(mode.n, mode.alpha * r / mode.radius) / math.sqrt(mode.norm_sq)
    sign = 1.0 if variant == "c" else -1.0
    return radial * np.exp(sign * 1j * mode.n * theta)


class DiskQuadrature:
    """Gauss-Legendre in r times uniform trapezoid in theta on the disk of radius R."""

    def __init__(self, R, n_radial=64, n_angular=128):
        if n_radial < 8 or n_angular < 8:
            raise ValueError("quadrature orders must be >= 8")
        x, w = np.polynomial.legendre.leggauss(n_radial)
        self.R = R
        self.r = 0.5 * R * (x + 1.0)
        self.wr = 0.5 * R * w
        self.theta = 2.0 * np.pi * np.arange(n_angular) / n_angular
        self.wt = 2.0 * np.pi / n_angular
        self.rr, self.tt = np.meshgrid(self.r, self.theta, indexing="ij")
        self.weight = (self.wr * self.r)[:, None] * self.wt

    def integrate(self, values):
        return np.sum(self.weight * values)

    def __call__(self, f):
        return self.integrate(f(self.rr, self.tt))


def disk_quadrature(f, R, n_radial=64, n_angular=128):
    """Integral of r*f(r, theta) dr dtheta over the disk."""
    return DiskQuadrature(R, n_radial, n_angular)(f)


def radial_profile(mode, r):
    return bessel_j(mode.n, mode.alpha * np.asarray(r) / mode.radius) / math.sqrt(mode.norm_sq)


def radial_integral(fn, R, order=96):
    x, w = np.polynomial.legendre.leggauss(order)
    r = 0.5 * R * (x + 1.0)
    return float(np.sum(0.5 * R * w * r * fn(r)))


@dataclass
class ModeIntegralTable:
    base_mode: EigenMode
    M22: float
    M0k_cs: list
    M2nk_ss: list
    modes_0k: list
    modes_2nk: list
    truncation_K: int
    forbidden_max: float = 0.0


def mode_integrals(base, K=20, n_radial=96, n_angular=None):
    """M22, M0k_cs (k=0..K) and M2nk_ss (k=1..K) for an n >= 1 base mode.

    Angular integrals are done exactly (the angular factors are pure
    exponentials), so each entry reduces to a radial Gauss-Legendre sum; a
    sample of forbidden angular families is also checked on a full 2-d grid.
    """
    if base.n < 1 or K < 1:
        raise ValueError("mode_integrals needs an n >= 1 base mode and K >= 1")
    n, R = base.n, base.radius
    prof = lambda r: radial_profile(base, r)
    two_pi = 2.0 * math.pi
    M22 = two_pi * radial_integral(lambda r: prof(r) ** 4, R, n_radial)
    modes0 = neumann_roots(0, K + 1, R)
    modes2 = neumann_roots(2 * n, K, R)
    M0 = [two_pi * radial_integral(lambda r, md=md: radial_profile(md, r) * prof(r) ** 2, R, n_radial)
          for md in modes0]
    M2 = [two_pi * radial_integral(lambda r, md=md: radial_profile(md, r) * prof(r) ** 2, R, n_radial)
          for md in modes2]
    # selection rule check: M_{jk,ss} with j != 2n vanishes by the angular integral
    q = DiskQuadrature(R, 48, n_angular or max(16, 8 * n + 8))
    probe = mode_of(2 * n + 1, 1, R)
    s = normalized_eigenfunction(base, q.rr, q.tt, "s")
    forb = abs(q.integrate(normalized_eigenfunction(probe, q.rr, q.tt, "c") * s * s))
    if forb > 1e-10:
        raise RuntimeError(f"forbidden mode integral not small: {forb}")
    return ModeIntegralTable(base, M22, M0, M2, modes0, modes2, K, forb)


def project_field(field, grid, mode, convention="complex"):
    """Fourier-Bessel coefficients (A, B) of a real field on the simulator grid.

    With convention="complex" the coefficients satisfy
    field ~ sum A phi^c + B phi^s for the unnormalised phi = J_n e^{+-in theta}.
    convention="real" doubles both for n > 0, which is the normalisation of
    the real cos/sin basis. For n = 0 the B entry is 0 and
    the returned flag is False.
    """
    theta = grid.theta[None, :]
    w = grid.cell_area()
    radial = bessel_j(mode.n, mode.alpha * grid.r / mode.radius)[:, None]
    denom = mode.norm_sq
    A = np.sum(w * field * radial * np.exp(-1j * mode.n * theta)) / denom
    if mode.n == 0:
        return A, 0.0 + 0.0j, False
    B = np.sum(w * field * radial * np.exp(1j * mode.n * theta)) / denom
    if convention == "real":
        A, B = 2 * A, 2 * B
    return A, B, True
