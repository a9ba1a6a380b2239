import numpy as np
import pytest

from diskhopf.model import (builtin, equilibrium_residual, fd_partial, find_equilibrium, linear_model,
                            taylor_expand)


def test_predprey_equilibrium():
    m = builtin("predprey")
    u, v = find_equilibrium(m)
    # closed form: u* = (d/(a e))^(1/alpha), v* = b u*(1-u*/K)/(a u*^alpha)
    us = (0.7 / 0.15) ** (1 / 0.6)
    assert u == pytest.approx(us, rel=1e-12)
    assert v == pytest.approx(0.25 * us * (1 - us / 20) / (0.3 * us ** 0.6), rel=1e-10)
    assert (round(u, 4), round(v, 4)) == (13.032, 0.8108)
    assert equilibrium_residual(m, (u, v)) < 1e-12


def test_brusselator_equilibrium():
    m = builtin("brusselator")
    assert find_equilibrium(m) == pytest.approx((1.0, 1.5), abs=1e-13)


@pytest.mark.parametrize("name", ["brusselator", "predprey"])
def test_analytic_taylor_matches_finite_differences(name):
    m = builtin(name)
    eq = find_equilibrium(m)
    a = taylor_expand(m, eq, analytic=True)
    f = taylor_expand(m, eq, analytic=False)
    assert np.allclose(a.a, f.a, atol=1e-8)
    assert np.allclose(a.b, f.b, atol=1e-8)
    assert a.c11 == pytest.approx(f.c11, abs=1e-8)
    assert np.allclose(a.hessians(), f.hessians(), atol=1e-6)
    assert np.allclose(a.hessians(True), f.hessians(True), atol=1e-6)
    assert np.allclose(a.third(), f.third(), atol=1e-4)
    assert np.allclose(a.nl_hess, f.nl_hess, atol=1e-7)


def test_fd_partial_polynomial():
    f = lambda x, y: x ** 3 * y + 2 * x * y ** 2
    assert fd_partial(f, (1.5, -0.5), (1, 1)) == pytest.approx(3 * 1.5 ** 2 + 4 * -0.5, rel=1e-9)
    assert fd_partial(f, (1.5, -0.5), (3, 0)) == pytest.approx(6 * -0.5, rel=1e-7)


def test_nonlocal_entries():
    td = taylor_expand(builtin("predprey"))
    u = td.equilibrium[0]
    assert td.c11 == pytest.approx(-0.25 * u / 20, rel=1e-12)
    assert td.A(True)[0, 0] == pytest.approx(td.a[0, 0] + td.c11)
    assert td.b[0, 0] == 0 and td.b[0, 1] == 0


def test_parameter_validation():
    with pytest.raises(ValueError):
        builtin("predprey", alpha=1.5)
    with pytest.raises(ValueError):
        builtin("brusselator", d1=-1.0)
    with pytest.raises(KeyError):
        builtin("nope")


def test_linear_model_jacobians():
    A = [[-1.0, 2.0], [0.5, -3.0]]
    B = [[0.0, 0.0], [0.3, -0.2]]
    td = taylor_expand(linear_model(A, B), (1.0, 1.0))
    assert np.allclose(td.a, A, atol=1e-9) and np.allclose(td.b, B, atol=1e-9)
    assert np.allclose(td.hessians(), 0, atol=1e-6)
