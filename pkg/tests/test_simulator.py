import os

import numpy as np
import pytest

from diskhopf import _kernels
from diskhopf.bessel_basis import bessel_j, mode_of
from diskhopf.model import builtin, linear_model
from diskhopf.simulator import (CSV_COLUMNS, History, ModalSeries, PolarGrid, RingFilter, Simulator,
                                classify_wave, counter_rotating_fit, diffusion_radius, initial_condition,
                                polar_laplacian, read_snapshot, render_ppm, run, snap_dt, stable_dt,
                                write_modal_csv, write_snapshot)

PP_EQ = (13.0320, 0.8108)


def _eigen_residual(n, m, N, R=6.0):
    md = mode_of(n, m, R)
    g = PolarGrid(N, 2 * N, R)
    f = bessel_j(n, md.alpha * g.rr / R) * np.cos(n * g.tt)
    return np.max(np.abs(polar_laplacian(f, g) + md.lam * f)) / np.max(np.abs(md.lam * f))


@pytest.mark.parametrize("n,m", [(0, 1), (1, 1), (2, 1), (0, 2)])
def test_laplacian_second_order(n, m):
    errs = [_eigen_residual(n, m, N) for N in (16, 32, 64)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.8), (errs, orders)


def test_laplacian_kills_constants():
    g = PolarGrid(32, 64, 6.0)
    assert np.max(np.abs(polar_laplacian(np.full(g.shape, 3.7), g))) < 1e-12


def test_filtered_operator_spectrum_real_nonpositive():
    g = PolarGrid(12, 24, 6.0)
    filt = RingFilter(g)
    n = g.Nr * g.Ntheta
    L = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        L[:, i] = filt(polar_laplacian(filt(e.reshape(g.shape).copy()), g)).ravel()
    ev = np.linalg.eigvals(L)
    assert np.max(ev.real) < 1e-9
    assert np.max(np.abs(ev.imag)) < 1e-6 * np.max(np.abs(ev))
    assert diffusion_radius(g) >= 0.99 * np.max(np.abs(ev))


def test_loop_and_numpy_laplacian_agree():
    g = PolarGrid(16, 32, 6.0)
    rng = np.random.default_rng(1)
    f = rng.standard_normal(g.shape)
    for j0 in (0, 3):
        a = _kernels.laplacian_np(f, g.r, g.dr, g.dtheta, j0)
        b = _kernels.laplacian_loop(f, g.r, g.dr, g.dtheta, j0, use_numba=False)
        assert np.max(np.abs(a - b)) < 1e-10 * np.max(np.abs(a))


@pytest.mark.skipif(not _kernels.numba_enabled(), reason="numba disabled")
@pytest.mark.parametrize("name", ["brusselator", "predprey"])
def test_numba_and_numpy_kernels_agree(name):
    m = builtin(name)
    g = PolarGrid(16, 32, m.domain_R)
    eq = (1.0, 1.5) if name == "brusselator" else PP_EQ
    ic = initial_condition("perturbed_cos", 0.1, 0.3, eq, u_trig="sin")
    a = Simulator(m, 1.0, g, use_numba=True)
    b = Simulator(m, 1.0, g, use_numba=False)
    sa, sb = a.init_state(ic), b.init_state(ic)
    for _ in range(20):
        a.step(sa)
        b.step(sb)
    assert np.max(np.abs(sa.u - sb.u)) < 1e-11 * np.max(np.abs(sa.u))
    assert np.max(np.abs(sa.v - sb.v)) < 1e-11 * np.max(np.abs(sa.v))


def test_generic_kernel_path():
    m = linear_model([[-0.2, 0.1], [-0.1, -0.3]], [[0, 0], [0.05, 0.02]], R=2.0)
    g = PolarGrid(8, 16, 2.0)
    tr = run(m, 0.5, 1.0, g, initial=initial_condition("perturbed_cos", 0.1, 0.0, (1.0, 1.0)))
    assert np.all(np.isfinite(tr.final.u))


def test_snap_dt():
    dt, n = snap_dt(0.0037, 3.0)
    assert n == 811 and dt == pytest.approx(3.0 / 811) and dt <= 0.0037
    assert snap_dt(5.0, 1.0) == (0.5, 2)


def test_rejects_unstable_dt():
    m = builtin("predprey")
    g = PolarGrid(16, 32, 6.0)
    with pytest.raises(ValueError):
        Simulator(m, 3.0, g, dt=2 * stable_dt(g, m))


def test_history_lags():
    h = History(4, (1, 1), (True, True))
    for k in range(6):
        h.push(np.full((1, 1), k), np.full((1, 1), -k))
    assert h.lag(0)[0][0, 0] == 5 and h.lag(3)[1][0, 0] == -2


def test_delayed_linear_mode_matches_characteristic_root():
    # a pure mode (1,1) perturbation of the predator-prey model grows at the rate
    # of the rightmost characteristic root of that mode
    m = builtin("predprey")
    g = PolarGrid(32, 64, 6.0)
    ic = initial_condition("perturbed_cos", 1e-4, 0.0, PP_EQ)
    tr = run(m, 3.0, 120.0, g, initial=ic, modes=((1, 1),), sample_dt=0.5)
    t, zc, *_ = tr.series.arrays((1, 1))
    sel = t > 60
    amp = np.abs(zc[sel])
    # envelope growth from local maxima
    peaks = [i for i in range(1, len(amp) - 1) if amp[i] >= amp[i - 1] and amp[i] >= amp[i + 1]]
    rate = np.polyfit(t[sel][peaks], np.log(amp[peaks]), 1)[0]
    assert rate == pytest.approx(0.01764, abs=2e-3)


def test_rotation_equivariance():
    m = builtin("predprey")
    g = PolarGrid(16, 32, 6.0)
    shift = 5
    base = initial_condition("custom", expr_u=f"{PP_EQ[0]} + 0.3*cos(t)*cos(r)*(cos(theta)+0.5*sin(2*theta))",
                             expr_v=f"{PP_EQ[1]} + 0.05*cos(r)*sin(3*theta+1)")
    rot = initial_condition("custom",
                            expr_u=f"{PP_EQ[0]} + 0.3*cos(t)*cos(r)*(cos(theta-{shift}*2*pi/32)"
                                   f"+0.5*sin(2*(theta-{shift}*2*pi/32)))",
                            expr_v=f"{PP_EQ[1]} + 0.05*cos(r)*sin(3*(theta-{shift}*2*pi/32)+1)")
    a = run(m, 3.0, 20.0, g, initial=base, modes=((0, 0),)).final
    b = run(m, 3.0, 20.0, g, initial=rot, modes=((0, 0),)).final
    assert np.max(np.abs(np.roll(a.u, shift, axis=1) - b.u)) < 1e-8
    assert np.max(np.abs(np.roll(a.v, shift, axis=1) - b.v)) < 1e-8


def test_run_is_deterministic_and_csv(tmp_path):
    m = builtin("predprey")
    g = PolarGrid(8, 16, 6.0)
    ic = initial_condition("perturbed_cos", 0.01, 0.0, PP_EQ, u_trig="sin")
    outs = []
    for k in range(2):
        tr = run(m, 3.0, 5.0, g, initial=ic, snapshot_every=2.5, out_dir=str(tmp_path / f"s{k}"))
        p = tmp_path / f"m{k}.csv"
        write_modal_csv(str(p), tr.series, (1, 1))
        outs.append((p.read_bytes(), [open(s, "rb").read() for s in tr.snapshots]))
    assert outs[0] == outs[1]
    head = outs[0][0].decode().splitlines()[0]
    assert head.split(",") == CSV_COLUMNS


def test_snapshot_roundtrip_and_render(tmp_path):
    g = PolarGrid(8, 16, 2.0)
    u = np.cos(g.tt) * g.rr
    v = np.sin(g.tt)
    p = tmp_path / "s.bin"
    write_snapshot(str(p), g, 1.5, u, v)
    g2, t, u2, v2 = read_snapshot(str(p))
    assert (g2.Nr, g2.Ntheta, g2.R, t) == (8, 16, 2.0, 1.5)
    assert np.array_equal(u, u2) and np.array_equal(v, v2)
    assert p.read_bytes()[:6] == b"DHOPF1"
    img = render_ppm(str(p), str(tmp_path), "u", 32)
    data = open(img, "rb").read()
    assert data.startswith(b"P6\n32 32\n255\n") and len(data) == len(b"P6\n32 32\n255\n") + 32 * 32 * 3
    assert "_min" in os.path.basename(img) and "_max" in os.path.basename(img)


def test_initial_condition_expressions():
    g = PolarGrid(4, 8, 1.0)
    ic = initial_condition("custom", expr_u="1 + r*cos(theta)", expr_v="exp(-t)")
    u, v = ic.sample(0.0, g)
    assert np.allclose(u, 1 + g.rr * np.cos(g.tt)) and np.allclose(v, 1.0)
    with pytest.raises(ValueError):
        initial_condition("custom", expr_u="__import__('os')", expr_v="1")
    with pytest.raises(ValueError):
        initial_condition("bogus")


def _series(zc_fn, mean_fn=lambda t: 10.0 + 0 * t, var_fn=lambda t: 1.0 + 0 * t, T=400.0):
    t = np.arange(0.0, T, 0.25)
    s = ModalSeries([(0, 0), (1, 1)])
    s.times = list(t)
    s.zc_u[(1, 1)] = list(zc_fn(t))
    s.mean_u = list(mean_fn(t))
    s.var_u = list(var_fn(t))
    return s


def test_classifier_synthetic():
    w = 0.176
    assert classify_wave(_series(lambda t: 2 * np.cos(w * t))).kind == "standing"
    assert classify_wave(_series(lambda t: np.exp(1j * w * t))).kind == "rotating_cw"
    assert classify_wave(_series(lambda t: np.exp(-1j * w * t) + 0.05 * np.exp(1j * w * t))).kind == "rotating_ccw"
    assert classify_wave(_series(lambda t: np.exp(1j * w * t) + 0.5 * np.exp(-1j * w * t))).kind == "mixed"
    homog = _series(lambda t: 0 * t, lambda t: 1.0 + 0.3 * np.sin(0.6 * t), lambda t: 0 * t)
    assert classify_wave(homog).kind == "homogeneous_cycle"
    flat = _series(lambda t: 0 * t, lambda t: 1.0 + 0 * t, lambda t: 0 * t)
    assert classify_wave(flat).kind == "steady"


def test_counter_rotating_fit_exact():
    t = np.linspace(0, 50, 400)
    z = 1.5 * np.exp(0.7j * t) + 0.25j * np.exp(-0.7j * t)
    a, b = counter_rotating_fit(t, z, 0.7)
    assert a == pytest.approx(1.5) and b == pytest.approx(0.25)
