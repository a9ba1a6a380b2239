import numpy as np
import pytest
from scipy import optimize

from diskhopf.bessel_basis import mode_of
from diskhopf.model import builtin, linear_model, taylor_expand
from diskhopf.spectrum import (bifurcation_curves, char_function, char_residual, count_unstable_roots,
                               dgamma_dtau, hopf_points, mean_mode_coupled, min_hopf)


def test_brusselator_min_hopf(brusselator):
    _, td, hp = brusselator
    assert (hp.mode.n, hp.mode.m) == (0, 0)
    assert hp.omega == pytest.approx(0.6166, abs=1e-3)
    assert hp.tau_hat == pytest.approx(0.7128, abs=1e-3)
    assert not hp.double and hp.transversal == 1
    assert hp.residual < 1e-12


def test_predprey_min_hopf(predprey):
    _, td, hp = predprey
    assert (hp.mode.n, hp.mode.m) == (1, 1)
    assert hp.tau_hat == pytest.approx(1.7825, abs=1e-3)
    assert hp.double and hp.transversal == 1


def test_hopf_point_oracle(predprey):
    # independent oracle: solve det = 0 for (omega, tau) with scipy from a nearby start
    _, td, hp = predprey

    def F(x):
        r = char_residual(td, hp.mode, x[1], 1j * x[0])
        return [r.real, r.imag]
    sol = optimize.fsolve(F, [hp.omega * 1.05, hp.tau_hat * 0.97], xtol=1e-14)
    assert sol[0] == pytest.approx(hp.omega, abs=1e-9)
    assert sol[1] == pytest.approx(hp.tau_hat, abs=1e-9)


def test_char_function_matches_determinant(predprey):
    _, td, hp = predprey
    for md in (mode_of(0, 0, 6.0), mode_of(1, 1, 6.0), mode_of(0, 2, 6.0)):
        cf = char_function(td, md, 2.0)
        for g in (0.3 + 0.2j, -0.1 + 1.1j):
            assert cf(g) == pytest.approx(char_residual(td, md, 2.0, g), abs=1e-12)


def test_transversality_matches_finite_difference(predprey):
    _, td, hp = predprey
    cf = char_function(td, hp.mode)
    dg = dgamma_dtau(cf, hp.omega, hp.tau_hat)
    # follow the root gamma(tau) by Newton and difference it
    def root(tau):
        g = 1j * hp.omega
        for _ in range(40):
            f = cf(g, tau)
            d = cf.dp(g) + (cf.dq(g) - tau * cf.q(g)) * np.exp(-g * tau)
            g = g - f / d
        return g
    h = 1e-5
    fd = (root(hp.tau_hat + h) - root(hp.tau_hat - h)) / (2 * h)
    assert dg == pytest.approx(fd, abs=1e-7)
    assert dg.real > 0


@pytest.mark.parametrize("ex", ["brusselator", "predprey"])
def test_root_count_flips(ex, brusselator, predprey):
    _, td, hp = brusselator if ex == "brusselator" else predprey
    below = count_unstable_roots(td, hp.mode, hp.tau_hat * 0.98)
    above = count_unstable_roots(td, hp.mode, hp.tau_hat * 1.02)
    assert below == 0
    assert above == (4 if hp.double else 2)


def test_count_against_polynomial_roots():
    # tau = 0: roots are eigenvalues of -lam D + A + B, counted with multiplicity
    td = taylor_expand(linear_model([[0.5, -1.0], [1.0, -0.2]], [[0, 0], [0.0, -0.1]]), (1.0, 1.0))
    md = mode_of(0, 0, 1.0)
    ev = np.linalg.eigvals(td.a + td.b)
    expect = int(np.sum(ev.real > 0))
    assert count_unstable_roots(td, md, 1e-9) == expect


def test_mean_coupling_switch():
    assert mean_mode_coupled(mode_of(0, 0, 6.0))
    assert not mean_mode_coupled(mode_of(0, 1, 6.0))
    assert mean_mode_coupled(mode_of(0, 1, 6.0), nonlocal_all_0m=True)
    assert not mean_mode_coupled(mode_of(1, 1, 6.0), nonlocal_all_0m=True)


def test_no_delay_no_hopf():
    td = taylor_expand(linear_model([[-1.0, 1.0], [-1.0, -1.0]], [[0, 0], [0, 0]]), (1.0, 1.0))
    assert hopf_points(td, mode_of(0, 0, 1.0), 50.0) == []
    with pytest.raises(RuntimeError):
        min_hopf(td, 1, 1, 50.0, 1.0)


def test_curves_short_sweep():
    fam = lambda a: builtin("predprey", alpha=a)
    rows, cross = bifurcation_curves(fam, [0.6], [(0, 0), (1, 1)], 50.0)
    assert rows[0][1][1] == pytest.approx(1.7825, abs=1e-3)
    assert cross == []
