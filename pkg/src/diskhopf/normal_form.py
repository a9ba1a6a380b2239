"""Center-manifold normal forms at a Hopf point of a disk mode.

Frame: time is rescaled so the delay equals 1; the linear operators then
carry a factor tau_hat and phases appear as nu = omega * tau_hat.
Center coordinates for an n >= 1 mode are (z1, z2, z3, z4) attached to
(xi c, conj(xi) c, xi s, conj(xi) s) with c = phi_hat^c, s = phi_hat^s.

Convention for the coefficient tables: the F_ij entering A, S and h are
Taylor coefficients (partial derivative divided by i! j! ...), which makes
the tabulated 2*tau_hat / 6*tau_hat prefactors consistent with the cubic
assembly B = C + 3/2 (D + E).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .bessel_basis import (DiskQuadrature, mode_integrals, neumann_roots,
                           normalized_eigenfunction)
from .spectrum import mean_mode_coupled

DEGENERATE_TOL = 1e-8
COND_MAX = 1e12

# angular index carried by each center coordinate, in units of n
Z_INDEX = (1, 1, -1, -1)
Z_CONJ = (False, True, False, True)


@dataclass
class CenterBasis:
    xi: np.ndarray
    p0: complex
    q: complex
    psi0: np.ndarray
    omega: float
    tau_hat: float
    phase: float
    mode: object
    mean_coupled: bool
    null_residual: float
    adjoint_residual: float

    @property
    def X1(self):
        return np.concatenate([self.xi, self.xi * np.exp(-1j * self.phase)])

    @property
    def X2(self):
        return self.X1.conj()

    def X(self, k):
        """Vector (phi(0), phi(-1)) of center coordinate z_k, k = 1..4."""
        return self.X2 if Z_CONJ[k - 1] else self.X1

    def psi(self, k):
        return self.psi0.conj() if Z_CONJ[k - 1] else self.psi0


def char_matrix(td, lam, gamma, tau, mean_coupled):
    return gamma * np.eye(2) + lam * td.D - td.A(mean_coupled) - td.b * np.exp(-gamma * tau)


def center_basis(td, hp, nonlocal_all_0m=False):
    mode = hp.mode
    mc = mean_mode_coupled(mode, nonlocal_all_0m)
    A = td.A(mc)
    w, t = hp.omega, hp.tau_hat
    if A[0, 1] == 0:
        raise ValueError("a12 = 0: p0 is undefined")
    p0 = (1j * w + td.D[0, 0] * mode.lam - A[0, 0]) / A[0, 1]
    xi = np.array([1.0, p0])
    M = char_matrix(td, mode.lam, 1j * w, t, mc)
    res = float(np.max(np.abs(M @ xi)))
    if res > 1e-9:
        raise RuntimeError(f"xi is not a null vector (residual {res})")
    # left null vector zeta = (1, z2) of M
    if abs(M[1, 0]) >= abs(M[1, 1]):
        zeta = np.array([1.0, -M[0, 0] / M[1, 0]])
    else:
        zeta = np.array([1.0, -M[0, 1] / M[1, 1]])
    q = complex(zeta @ (np.eye(2) + t * td.b * np.exp(-1j * w * t)) @ xi)
    if abs(q) < 1e-14:
        raise RuntimeError("adjoint pairing is singular")
    psi0 = zeta / q
    return CenterBasis(xi, complex(p0), q, psi0, w, t, w * t, mode, mc, res,
                       float(np.max(np.abs(zeta @ M))))


def pairing_matrix(td, basis, n_time=24, quad=None):
    """(Psi_j, Phi_k) under the delay bilinear form times the weighted L2
    pairing of the spatial factors, evaluated by quadrature."""
    t, nu = basis.tau_hat, basis.phase
    x, w = np.polynomial.legendre.leggauss(n_time)
    s = 0.5 * (x - 1.0)  # nodes on [-1, 0]
    ws = 0.5 * w
    mode = basis.mode
    kinds = range(1, 5) if mode.n > 0 else range(1, 3)
    quad = quad or DiskQuadrature(mode.radius, 48, max(16, 8 * mode.n + 8))
    spat = lambda k: normalized_eigenfunction(mode, quad.rr, quad.tt, "c" if k in (1, 2) else "s")
    P = np.zeros((len(kinds), len(kinds)), complex)
    for a, j in enumerate(kinds):
        for b_, k in enumerate(kinds):
            sj = 1 if not Z_CONJ[j - 1] else -1
            sk = 1 if not Z_CONJ[k - 1] else -1
            eta = basis.psi(j)
            xi = basis.xi if sk == 1 else basis.xi.conj()
            # psi(s') = eta e^{-i sj nu s'}, phi(th) = xi e^{i sk nu th}
            inner = eta @ xi
            integrand = np.array([eta @ (t * td.b) @ xi * np.exp(-1j * sj * nu * (si + 1.0))
                                  * np.exp(1j * sk * nu * si) for si in s])
            inner += np.sum(ws * integrand)
            P[a, b_] = inner * quad.integrate(spat(k) * np.conj(spat(j)))
    return P


# Taylor bookkeeping

def taylor_tensors(td, homogeneous=False):
    H = td.hessians(homogeneous)
    T = td.third(homogeneous)
    return H, T


def _contract(T, vecs):
    out = T
    for v in vecs:
        out = np.tensordot(out, v, axes=([1], [0]))
    return out


def _monomials(order, nz=4):
    return [p for p in itertools.product(range(order + 1), repeat=nz) if sum(p) == order]


def _pfact(p):
    return math.prod(math.factorial(k) for k in p)


def taylor_A(td, basis, homogeneous=False):
    """A_p for |p| = 2, 3: prefactor (2 or 6) * tau_hat times the coefficient of
    z^p in the Taylor polynomial evaluated at sum_k z_k X_k."""
    H, T = taylor_tensors(td, homogeneous)
    nz = 4 if basis.mode.n > 0 else 2
    Xs = [basis.X(k) for k in range(1, nz + 1)]
    out = {}
    for order, tens, pref in ((2, H, 2.0), (3, T, 6.0)):
        for p in _monomials(order, nz):
            vecs = [Xs[k] for k in range(nz) for _ in range(p[k])]
            coef = _contract(tens, vecs) / _pfact(p)
            out[p] = pref * basis.tau_hat * coef
    return out


def s_operators(td, basis, homogeneous=False):
    """S_{y(0)z_k}, S_{y(-1)z_k} (2x2 each): 2*tau_hat times the Jacobian of the
    quadratic Taylor part at X_k with respect to y(0) and y(-1)."""
    H, _ = taylor_tensors(td, homogeneous)
    nz = 4 if basis.mode.n > 0 else 2
    out = {}
    for k in range(1, nz + 1):
        J = 2.0 * basis.tau_hat * np.tensordot(H, basis.X(k), axes=([1], [0]))
        out[k] = (J[:, 0:2], J[:, 2:4])
    return out


def s_nonlocal(td, basis, k):
    """Extra y(0) block from c u uhat-type terms when y lives in the mean mode."""
    X = basis.X(k)
    S = np.zeros((2, 2), complex)
    S[0, 0] = 2.0 * basis.tau_hat * (td.nl_hess[0] * X[0] + td.nl_hess[1] * X[1])
    return S


def resolvent(td, basis, lam, kappa, mean_coupled):
    """[-i kappa - lam D~ + L~(e^{i kappa .} I)] with D~ = tau D, L~ = tau L."""
    t = basis.tau_hat
    return -1j * kappa * np.eye(2) - t * lam * td.D + t * (td.A(mean_coupled) + td.b * np.exp(-1j * kappa))


def _frequency(p):
    # z1, z3 rotate as e^{i nu}, z2, z4 as e^{-i nu}
    s = (1, -1, 1, -1)
    return sum(pi * si for pi, si in zip(p, s))


def h_correction(td, basis, lam, M, monomial, A, mean_coupled):
    """Second-order correction of one mode family: returns (h(0), h(-1))."""
    kappa = _frequency(monomial) * basis.phase
    Rm = resolvent(td, basis, lam, kappa, mean_coupled)
    if np.linalg.cond(Rm) > COND_MAX:
        raise RuntimeError(f"near-resonant resolvent for monomial {monomial} (lambda={lam})")
    h0 = -M * np.linalg.solve(Rm, A[monomial])
    return h0, h0 * np.exp(-1j * kappa)


def h_corrections(td, basis, integrals, k, monomial, family, A=None, nonlocal_all_0m=False):
    """Centre-manifold correction h for family '0k_ccs', '2nk_ccs' or '2nk_css' and mode index k."""
    A = taylor_A(td, basis) if A is None else A
    if family == "0k_ccs":
        md = integrals.modes_0k[k]
        M = integrals.M0k_cs[k]
        mc = mean_mode_coupled(md, nonlocal_all_0m)
    elif family in ("2nk_ccs", "2nk_css"):
        md = integrals.modes_2nk[k - 1]
        M = integrals.M2nk_ss[k - 1]
        mc = False
    else:
        raise ValueError(f"unknown family {family!r}")
    return h_correction(td, basis, md.lam, M, monomial, A, mc)


def apply_S(S, k, h, extra=None):
    S0, S1 = S[k]
    out = S0 @ h[0] + S1 @ h[1]
    if extra is not None:
        out = out + extra @ h[0]
    return out


@dataclass
class NormalFormResult:
    B11: complex
    B2001: complex
    B1110: complex
    B2100: complex = 0j
    B0120: complex = 0j
    B0021: complex = 0j
    B1011: complex = 0j
    C: dict = field(default_factory=dict)
    E: dict = field(default_factory=dict)
    D: dict = field(default_factory=dict)
    terms: list = field(default_factory=list)
    truncation_K: int = 20
    tail_estimate: float = 0.0
    tail_warning: bool = False
    basis: object = None
    integrals: object = None

    @property
    def a1(self):
        return self.B11.real

    @property
    def a2(self):
        return self.B2001.real

    @property
    def a3(self):
        return self.B1110.real

    @property
    def case_label(self):
        return case_label(self.a2, self.a3)


def case_label(a2, a3):
    """Unfolding case 1..6 from the signs of (a2, a2+a3, a2-a3), for a1 mu > 0."""
    s = (a2 > 0, a2 + a3 > 0, a2 - a3 > 0)
    table = {
        (False, False, False): 1,  # a2<0, a2+a3<0, a2-a3<0
        (False, False, True): 2,   # a2<0, a2+a3<0, a2-a3>0
        (False, True, False): 3,   # a2<0, a2+a3>0, a2-a3<0
        (True, True, True): 4,     # a2>0, a2+a3>0, a2-a3>0
        (True, True, False): 5,    # a2>0, a2+a3>0, a2-a3<0
        (True, False, True): 6,    # a2>0, a2+a3<0, a2-a3>0
    }
    return table.get(s, 0)


def linear_coefficient(td, basis):
    """B11 = Psi(0) (-lam D Phi(0) + L Phi) with the unscaled D, L."""
    xi = basis.xi
    L = td.A(basis.mean_coupled) @ xi + td.b @ xi * np.exp(-1j * basis.phase)
    return complex(basis.psi0 @ (-basis.mode.lam * td.D @ xi + L))


def assemble(td, basis, integrals=None, K=20, nonlocal_all_0m=False, check_zeros=True):
    """Equivariant normal form coefficients for an n >= 1 critical mode."""
    if basis.mode.n < 1:
        raise ValueError("assemble handles n >= 1 modes; use standard_hopf_n0")
    if integrals is None or integrals.truncation_K != K:
        integrals = mode_integrals(basis.mode, K)
    A = taylor_A(td, basis)
    S = s_operators(td, basis)
    eta = basis.psi0
    M22 = integrals.M22
    C2001 = eta @ A[(2, 0, 0, 1)] * M22 / 6
    C1110 = eta @ A[(1, 1, 1, 0)] * M22 / 6
    E2001 = 0j
    E1110 = 0j
    terms = []
    for k, md in enumerate(integrals.modes_0k):
        M = integrals.M0k_cs[k]
        mc = mean_mode_coupled(md, nonlocal_all_0m)
        nl = {j: s_nonlocal(td, basis, j) for j in (1, 2)} if (mc and md.m == 0) or (mc and nonlocal_all_0m) else {}
        h1001 = h_correction(td, basis, md.lam, M, (1, 0, 0, 1), A, mc)
        h0110 = h_correction(td, basis, md.lam, M, (0, 1, 1, 0), A, mc)
        h1010 = h_correction(td, basis, md.lam, M, (1, 0, 1, 0), A, mc)
        e2001 = eta @ (M * apply_S(S, 1, h1001, nl.get(1))) / 6
        e1110 = eta @ (M * (apply_S(S, 1, h0110, nl.get(1)) + apply_S(S, 2, h1010, nl.get(2)))) / 6
        E2001 += e2001
        E1110 += e1110
        terms.append(("0k", k, md.lam, M, e2001, e1110))
    for k, md in enumerate(integrals.modes_2nk, start=1):
        M = integrals.M2nk_ss[k - 1]
        h2000 = h_correction(td, basis, md.lam, M, (2, 0, 0, 0), A, False)
        h1100 = h_correction(td, basis, md.lam, M, (1, 1, 0, 0), A, False)
        e2001 = eta @ (M * apply_S(S, 4, h2000)) / 6
        e1110 = eta @ (M * apply_S(S, 3, h1100)) / 6
        E2001 += e2001
        E1110 += e1110
        terms.append(("2nk", k, md.lam, M, e2001, e1110))
    D = {"2001": 0j, "1110": 0j}
    B2001 = C2001 + 1.5 * (D["2001"] + E2001)
    B1110 = C1110 + 1.5 * (D["1110"] + E1110)
    # tail: size of the last retained terms, scaled by K / decay exponent (~1/lambda)
    last = max(abs(terms[len(integrals.modes_0k) - 1][4]) + abs(terms[len(integrals.modes_0k) - 1][5]),
               abs(terms[-1][4]) + abs(terms[-1][5]))
    tail = 1.5 * last * K / 2.0
    res = NormalFormResult(linear_coefficient(td, basis), complex(B2001), complex(B1110),
                           C={"2001": complex(C2001), "1110": complex(C1110)},
                           E={"2001": complex(E2001), "1110": complex(E1110)}, D=D,
                           terms=terms, truncation_K=K, tail_estimate=float(tail),
                           basis=basis, integrals=integrals)
    res.tail_warning = tail > 0.01 * max(abs(res.B2001), abs(res.B1110))
    if check_zeros:
        gen = GenericCubic(td, basis, K, nonlocal_all_0m)
        res.B2100 = gen.coefficient((2, 1, 0, 0))
        res.B0120 = gen.coefficient((0, 1, 2, 0))
        res.B0021 = gen.coefficient((0, 0, 2, 1))
        res.B1011 = gen.coefficient((1, 0, 1, 1))
    return res


class GenericCubic:
    """Independent route to any cubic coefficient of any z_target equation.

    Spatial factors are integrated on a full polar grid (so angular selection
    rules are not assumed), and every family mode phi_{0k}, phi^{c,s}_{2n,k}
    is visited explicitly.
    """

    def __init__(self, td, basis, K=20, nonlocal_all_0m=False, n_radial=96):
        self.td, self.basis, self.K = td, basis, K
        self.nonlocal_all_0m = nonlocal_all_0m
        mode = basis.mode
        n = mode.n
        self.quad = DiskQuadrature(mode.radius, n_radial, 8 * n + 16)
        rr, tt = self.quad.rr, self.quad.tt
        c = normalized_eigenfunction(mode, rr, tt, "c")
        s = normalized_eigenfunction(mode, rr, tt, "s")
        self.spat = {1: c, 2: c, 3: s, 4: s}
        fam = []
        for md in neumann_roots(0, K + 1, mode.radius):
            fam.append((md, normalized_eigenfunction(md, rr, tt, "c")))
        for md in neumann_roots(2 * n, K, mode.radius):
            fam.append((md, normalized_eigenfunction(md, rr, tt, "c")))
            fam.append((md, normalized_eigenfunction(md, rr, tt, "s")))
        self.family = fam
        self.A = taylor_A(td, basis)
        self.S = s_operators(td, basis)
        self._h = {}

    def _integral(self, f):
        return self.quad.integrate(f)

    def h(self, q, fi):
        key = (q, fi)
        if key not in self._h:
            md, phi = self.family[fi]
            spatial = np.ones_like(phi)
            for k in range(4):
                for _ in range(q[k]):
                    spatial = spatial * self.spat[k + 1]
            Min = self._integral(spatial * np.conj(phi))
            if abs(Min) < 1e-13:
                self._h[key] = None
            else:
                mc = mean_mode_coupled(md, self.nonlocal_all_0m)
                self._h[key] = h_correction(self.td, self.basis, md.lam, Min, q, self.A, mc)
        return self._h[key]

    def coefficient(self, p, target=1):
        eta = self.basis.psi(target)
        w = np.conj(self.spat[target])
        spatial = np.ones_like(w)
        for k in range(4):
            for _ in range(p[k]):
                spatial = spatial * self.spat[k + 1]
        C = eta @ self.A[p] * self._integral(spatial * w) / 6
        E = 0j
        for a in range(4):
            if p[a] == 0:
                continue
            q = tuple(p[k] - (1 if k == a else 0) for k in range(4))
            for fi, (md, phi) in enumerate(self.family):
                h = self.h(q, fi)
                if h is None:
                    continue
                Mout = self._integral(phi * self.spat[a + 1] * w)
                if abs(Mout) < 1e-13:
                    continue
                mc = mean_mode_coupled(md, self.nonlocal_all_0m)
                extra = s_nonlocal(self.td, self.basis, a + 1) if mc else None
                E += eta @ (Mout * apply_S(self.S, a + 1, h, extra)) / 6
        return complex(C + 1.5 * E)


# standard Hopf for n = 0 modes

@dataclass
class StandardHopfResult:
    B11: complex
    B2100: complex
    c1_unit: complex
    g20: complex
    g11: complex
    g02: complex
    g21: complex

    @property
    def a1(self):
        return self.B11.real

    @property
    def a2(self):
        return self.B2100.real

    @property
    def degenerate(self):
        return abs(self.a2) < DEGENERATE_TOL

    @property
    def direction(self):
        if self.degenerate:
            return "degenerate"
        return "supercritical" if self.a1 * self.a2 < 0 else "subcritical"

    @property
    def stable(self):
        return (not self.degenerate) and self.a2 < 0


def standard_hopf_n0(td, hp, K=20, nonlocal_all_0m=False):
    """Two-dimensional center manifold reduction for an n = 0 critical mode."""
    mode = hp.mode
    if mode.n != 0:
        raise ValueError("standard_hopf_n0 needs an n = 0 mode")
    basis = center_basis(td, hp, nonlocal_all_0m)
    t, nu = basis.tau_hat, basis.phase
    homogeneous = mode.m == 0
    H, T = taylor_tensors(td, homogeneous)
    X1, X2 = basis.X1, basis.X2
    eta = basis.psi0
    Q = lambda X, Y: 0.5 * t * _contract(H, [X, Y])
    Cc = lambda X, Y, Z: t / 6.0 * _contract(T, [X, Y, Z])
    R = mode.radius
    modes0 = neumann_roots(0, max(K, mode.m) + 1, R)
    prof = lambda md, r: normalized_eigenfunction(md, r, 0.0, "c").real
    x, w = np.polynomial.legendre.leggauss(128)
    r = 0.5 * R * (x + 1.0)
    wr = 0.5 * R * w * r * 2 * np.pi
    crit = prof(mode, r)
    M3 = [float(np.sum(wr * prof(md, r) * crit * crit)) for md in modes0]
    M4 = float(np.sum(wr * crit ** 4))
    Mself = M3[mode.m]
    g20 = 2 * eta @ Q(X1, X1) * Mself
    g11 = 2 * eta @ Q(X1, X2) * Mself
    g02 = 2 * eta @ Q(X2, X2) * Mself
    qv = lambda th: basis.xi * np.exp(1j * nu * th)
    ext = lambda f: np.concatenate([f(0.0), f(-1.0)])

    def nl_term(X, W):
        # bilinear u*uhat contribution when W sits in the mean mode and X does not
        return np.array([t * (td.nl_hess[0] * X[0] + td.nl_hess[1] * X[1]) * W[0], 0.0])

    g21_sum = 3 * Cc(X1, X1, X2) * M4
    for k, md in enumerate(modes0):
        Mk = M3[k]
        if abs(Mk) < 1e-14:
            continue
        mc = mean_mode_coupled(md, nonlocal_all_0m)
        D2 = -resolvent(td, basis, md.lam, 2 * nu, mc)
        D0 = -resolvent(td, basis, md.lam, 0.0, mc)
        E1 = np.linalg.solve(D2, 2 * Q(X1, X1) * Mk)
        E2 = np.linalg.solve(D0, 2 * Q(X1, X2) * Mk)
        if k == mode.m:
            W20 = lambda th: (1j * g20 / nu * qv(th) + 1j * np.conj(g02) / (3 * nu) * np.conj(qv(th))
                              + E1 * np.exp(2j * nu * th))
            W11 = lambda th: (-1j * g11 / nu * qv(th) + 1j * np.conj(g11) / nu * np.conj(qv(th)) + E2)
        else:
            W20 = lambda th, E1=E1: E1 * np.exp(2j * nu * th)
            W11 = lambda th, E2=E2: E2 + 0 * th
        w20, w11 = ext(W20), ext(W11)
        term = 2 * Q(X1, w11) + Q(X2, w20)
        if md.m == 0 and not homogeneous and td.c11 != 0:
            term = term + nl_term(X1, w11) + 0.5 * nl_term(X2, w20)
        g21_sum = g21_sum + term * Mk
    g21 = 2 * eta @ g21_sum
    c1 = 1j / (2 * nu) * (g20 * g11 - 2 * abs(g11) ** 2 - abs(g02) ** 2 / 3) + g21 / 2
    B11 = linear_coefficient(td, basis)
    # c1 for the unit (un-normalised) spatial profile, for reference
    unit = c1 * (mode.norm_sq / (math.pi * R * R)) if mode.m == 0 else c1
    return StandardHopfResult(B11, complex(c1), complex(c1 * math.pi * R * R) if mode.m == 0 else complex(unit),
                              complex(g20), complex(g11), complex(g02), complex(g21))


# wave predictions

@dataclass
class WavePrediction:
    kind: str
    exists: bool
    stable: bool
    amplitude: float
    condition: str
    waveform: object = None


def classify(nf, mu):
    a1, a2, a3 = nf.a1, nf.a2, nf.a3
    a1mu = a1 * mu
    out = [WavePrediction("trivial", True, a1mu < 0, 0.0, "stable iff a1 mu < 0")]
    basis = nf.basis
    if abs(a2) >= DEGENERATE_TOL:
        r2 = -a1mu / a2
        exists = r2 > 0
        stable = exists and a1mu > 0 and a2 + a3 < 0 and a2 - a3 > 0
        amp = math.sqrt(r2) if exists else 0.0
        for kind, sign in (("rotating_plus", 1), ("rotating_minus", -1)):
            out.append(WavePrediction(kind, exists, stable, amp,
                                      "exists iff a1 mu / a2 < 0; stable iff a1 mu > 0, a2+a3 < 0, a2-a3 > 0",
                                      _rotating_sampler(basis, amp, sign) if basis is not None else None))
    if abs(a2 + a3) >= DEGENERATE_TOL:
        r2 = -a1mu / (a2 + a3)
        exists = r2 > 0
        stable = exists and a1mu > 0 and a2 + a3 < 0 and a2 - a3 < 0
        amp = math.sqrt(r2) if exists else 0.0
        out.append(WavePrediction("standing", exists, stable, amp,
                                  "exists iff a1 mu / (a2+a3) < 0; stable iff a1 mu > 0, a2+a3 < 0, a2-a3 < 0",
                                  _standing_sampler(basis, amp) if basis is not None else None))
    return out


def _rotating_sampler(basis, rho, sign):
    mode, xi, w = basis.mode, basis.xi, basis.omega

    def f(r, theta, t, component=0):
        J = normalized_eigenfunction(mode, r, 0.0, "c").real
        p = xi[component]
        return 2 * abs(p) * rho * J * np.cos(np.angle(p) + w * t + sign * mode.n * theta)
    return f


def _standing_sampler(basis, rho):
    mode, xi, w = basis.mode, basis.xi, basis.omega

    def f(r, theta, t, component=0):
        J = normalized_eigenfunction(mode, r, 0.0, "c").real
        p = xi[component]
        return 4 * abs(p) * rho * J * np.cos(np.angle(p) + w * t) * np.cos(mode.n * theta)
    return f


def normal_form(td, hp, K=20, nonlocal_all_0m=False):
    basis = center_basis(td, hp, nonlocal_all_0m)
    return assemble(td, basis, mode_integrals(hp.mode, K), K, nonlocal_all_0m)
