import math

import numpy as np
import pytest
from scipy import special

from diskhopf.bessel_basis import (DiskQuadrature, bessel_j, bessel_j_prime, disk_quadrature, eigen_table,
                                   mode_integrals, mode_of, neumann_roots, normalized_eigenfunction,
                                   project_field)
from diskhopf.simulator import PolarGrid


@pytest.mark.parametrize("n", [0, 1, 2, 3, 5, 8, 12])
def test_bessel_matches_scipy(n):
    x = np.linspace(0.0, 40.0, 801)
    assert np.max(np.abs(bessel_j(n, x) - special.jv(n, x))) < 1e-12
    assert np.max(np.abs(bessel_j_prime(n, x) - special.jvp(n, x))) < 1e-11


@pytest.mark.parametrize("n", [0, 1, 2, 4, 8])
def test_neumann_roots_match_scipy(n):
    R = 6.0
    modes = neumann_roots(n, 10, R)
    ref = special.jnp_zeros(n, 10 if n else 9)
    alphas = np.array([md.alpha for md in modes])
    if n == 0:
        assert alphas[0] == 0.0 and modes[0].lam == 0.0
        alphas = alphas[1:]
    assert np.max(np.abs(alphas - ref)) < 1e-10
    assert all(abs(md.lam - (md.alpha / R) ** 2) < 1e-14 for md in modes)


def test_interlacing_and_multiplicity():
    for n in range(5):
        a = [md.alpha for md in neumann_roots(n, 8, 3.0) if md.alpha > 0]
        z = special.jn_zeros(n, 12)
        for lo, hi in zip(a[:-1], a[1:]):
            assert np.sum((z > lo) & (z < hi)) == 1
        assert all(md.multiplicity == (1 if n == 0 else 2) for md in neumann_roots(n, 3, 3.0))


def test_frozen_examples():
    md = neumann_roots(1, 1, 6.0)[0]
    assert md.alpha == pytest.approx(1.8411837813, abs=1e-9)
    assert md.lam == pytest.approx((1.8411837813 / 6.0) ** 2, rel=1e-9)
    two = neumann_roots(0, 2, 10.0)
    assert two[1].alpha == pytest.approx(3.8317059702, abs=1e-9)
    assert two[1].lam == pytest.approx(0.146819, abs=1e-6)
    assert len(neumann_roots(0, 1, 1.0)) == 1


def test_normalisation_and_constant_mode():
    R = 6.0
    q = DiskQuadrature(R, 64, 128)
    c0 = normalized_eigenfunction(mode_of(0, 0, R), 1.3, 0.4)
    assert c0 == pytest.approx(1 / math.sqrt(math.pi * R * R), rel=1e-14)
    for (n, m) in [(0, 0), (0, 2), (1, 1), (2, 3), (4, 4)]:
        md = mode_of(n, m, R)
        c = normalized_eigenfunction(md, q.rr, q.tt, "c")
        s = normalized_eigenfunction(md, q.rr, q.tt, "s")
        assert abs(q.integrate(c * s) - 1.0) < 1e-9
        assert np.allclose(normalized_eigenfunction(md, 2.0, 0.0, "c"), normalized_eigenfunction(md, 2.0, 0.0, "s"))


def test_orthogonality_up_to_4_4():
    R = 6.0
    q = DiskQuadrature(R, 96, 64)
    modes = eigen_table(4, 4, R)
    worst = 0.0
    for i, a in enumerate(modes):
        fa = normalized_eigenfunction(a, q.rr, q.tt, "c")
        for b in modes[i + 1:]:
            fb = normalized_eigenfunction(b, q.rr, q.tt, "c")
            worst = max(worst, abs(q.integrate(fa * np.conj(fb))))
    assert worst < 1e-8


def test_quadrature_closed_forms():
    R = 2.5
    assert disk_quadrature(lambda r, t: np.ones_like(r), R) == pytest.approx(math.pi * R * R, abs=1e-10)
    assert disk_quadrature(lambda r, t: r ** 2 * np.cos(t) ** 2, R) == pytest.approx(math.pi * R ** 4 / 4, rel=1e-12)
    q = DiskQuadrature(R, 64, 128)
    f = normalized_eigenfunction(mode_of(1, 1, R), q.rr, q.tt, "c") * normalized_eigenfunction(mode_of(2, 1, R), q.rr, q.tt, "s")
    assert abs(q.integrate(f)) < 1e-9


def test_mode_integrals():
    R = 6.0
    base = mode_of(1, 1, R)
    t = mode_integrals(base, 20)
    assert t.M0k_cs[0] == pytest.approx(1 / math.sqrt(math.pi * R * R), abs=1e-9)
    assert t.M22 > 0
    assert abs(mode_integrals(base, 20, n_radial=192).M22 - t.M22) < 1e-8
    assert t.forbidden_max < 1e-10
    assert len(t.M0k_cs) == 21 and len(t.M2nk_ss) == 20
    # oracle: the 2-d quadrature of phi_0k phi^c phi^s
    q = DiskQuadrature(R, 96, 32)
    c = normalized_eigenfunction(base, q.rr, q.tt, "c")
    for k in (1, 5):
        md = t.modes_0k[k]
        ref = q.integrate(normalized_eigenfunction(md, q.rr, q.tt, "c") * c * np.conj(c))
        assert t.M0k_cs[k] == pytest.approx(ref.real, abs=1e-10)


def test_project_field_roundtrip():
    g = PolarGrid(64, 128, 6.0)
    md = mode_of(1, 1, 6.0)
    f = (normalized_eigenfunction(md, g.rr, g.tt, "c") + normalized_eigenfunction(md, g.rr, g.tt, "s")).real
    A, B, ok = project_field(f, g, md)
    assert ok and abs(A) > 0 and abs(abs(A) - abs(B)) < 1e-12
    A0, B0, ok0 = project_field(np.full(g.shape, 2.0), g, mode_of(0, 0, 6.0))
    assert not ok0 and B0 == 0 and A0 == pytest.approx(2.0, rel=1e-12)
    A1, _, _ = project_field(np.full(g.shape, 2.0), g, mode_of(0, 2, 6.0))
    assert abs(A1) < 1e-3
