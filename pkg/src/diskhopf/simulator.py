"""Explicit method-of-lines simulation of the delayed system on a polar grid.

Cell-centred radii r_j = (j + 1/2) dr keep nodes off the pole. The radial
part of the Laplacian uses five-point differences with ghost rows taken
across the pole and, beyond r = R, from a zero-slope quartic; ghost weights
sum to one, so constants are annihilated exactly.

Near the pole the angular term makes the explicit step tiny, so every RK4
stage passes the right-hand side through a ring filter that keeps angular
wavenumbers |k| <= 2j + 1 on ring j. With it the step limit is set by dr
alone.
"""
from __future__ import annotations

import math
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .bessel_basis import mode_of, normalized_eigenfunction

RK4_REAL_LIMIT = 2.78
MAGIC = b"DHOPF1"


class SimulationError(RuntimeError):
    pass


class PolarGrid:
    def __init__(self, Nr, Ntheta, R):
        if Nr < 4 or Ntheta < 4 or Ntheta % 2 or R <= 0:
            raise ValueError("need Nr >= 4, an even Ntheta >= 4 and R > 0")
        self.Nr, self.Ntheta, self.R = int(Nr), int(Ntheta), float(R)
        self.dr = self.R / self.Nr
        self.dtheta = 2 * math.pi / self.Ntheta
        self.r = (np.arange(self.Nr) + 0.5) * self.dr
        self.theta = np.arange(self.Ntheta) * self.dtheta
        self.rr, self.tt = np.meshgrid(self.r, self.theta, indexing="ij")
        self._area = (self.r * self.dr)[:, None] * np.full(self.Ntheta, self.dtheta)
        self._wflat = (self._area / np.sum(self._area)).ravel()

    @property
    def r_nodes(self):
        return self.r

    @property
    def shape(self):
        return (self.Nr, self.Ntheta)

    def cell_area(self):
        return self._area

    def total_area(self):
        return float(np.sum(self._area))

    def mean(self, f):
        return float(np.dot(self._wflat, np.ravel(f)))

    def variance(self, f):
        m = self.mean(f)
        return float(np.sum(self._area * (f - m) ** 2) / np.sum(self._area))

    def __repr__(self):
        return f"PolarGrid(Nr={self.Nr}, Ntheta={self.Ntheta}, R={self.R})"


def polar_laplacian(field, grid):
    """Discrete Laplacian: five-point radial part, spectral angular part on the
    filtered inner rings and a second difference in theta further out."""
    f = np.asarray(field, float)
    filt = RingFilter(grid)
    out = _kernels.laplacian_np(f, grid.r, grid.dr, grid.dtheta, filt.rows)
    return filt.add_angular(out, f, 1.0, apply_mask=False)


class RingFilter:
    """Drops angular wavenumbers above 2j + 1 on the inner rings j < rows.

    The filtered rings are those where 2j + 1 < 2/dtheta, i.e. where the cap
    is below the largest wavenumber the angular second difference would
    otherwise stiffen; outside them the plain stencil is no stiffer than
    the capped rings. add_angular also adds d * (-k^2 / r_j^2) f_k on the
    filtered rings, i.e. the angular part of the Laplacian computed exactly
    in Fourier space.
    """

    def __init__(self, grid):
        nt = grid.Ntheta
        half = nt // 2
        kmax = 2 * np.arange(grid.Nr) + 1
        self.rows = int(np.sum(kmax < min(half, 2.0 / grid.dtheta)))
        k = np.arange(half + 1)
        self.mask = (k[None, :] <= kmax[:self.rows, None]).astype(float)
        self.ang = -(k[None, :] ** 2) / grid.r[:self.rows, None] ** 2
        self.nt = nt
        self._buf = np.empty((4, self.rows, nt))

    def __call__(self, f):
        if self.rows == 0:
            return f
        F = np.fft.rfft(f[:self.rows], axis=1)
        f[:self.rows] = np.fft.irfft(F * self.mask, n=self.nt, axis=1)
        return f

    def add_angular(self, rhs, f, d, apply_mask=True):
        if self.rows == 0:
            return rhs
        F = np.fft.rfft(rhs[:self.rows], axis=1) + d * self.ang * np.fft.rfft(f[:self.rows], axis=1)
        if apply_mask:
            F *= self.mask
        rhs[:self.rows] = np.fft.irfft(F, n=self.nt, axis=1)
        return rhs

    def add_angular_pair(self, fu, fv, u, v, d1, d2):
        """add_angular for both components with one batch of transforms."""
        if self.rows == 0:
            return fu, fv
        j = self.rows
        buf = self._buf
        buf[0], buf[1], buf[2], buf[3] = fu[:j], fv[:j], u[:j], v[:j]
        F = np.fft.rfft(buf, axis=2)
        R = F[:2]
        R[0] += d1 * self.ang * F[2]
        R[1] += d2 * self.ang * F[3]
        R *= self.mask
        out = np.fft.irfft(R, n=self.nt, axis=2)
        fu[:j] = out[0]
        fv[:j] = out[1]
        return fu, fv


_RADIUS_CACHE = {}


def diffusion_radius(grid, iters=300):
    """Spectral radius of the filtered discrete Laplacian, by power iteration.

    A deterministic start vector with all angular wavenumbers is used; the
    estimate is inflated by 2% to cover the residual of the iteration.
    """
    key = (grid.Nr, grid.Ntheta, grid.R)
    if key not in _RADIUS_CACHE:
        filt = RingFilter(grid)
        x = np.cos(1.3 * np.arange(grid.Nr))[:, None] * np.cos(2.1 * np.arange(grid.Ntheta) + 0.3)[None, :]
        x = x + (-1.0) ** np.add.outer(np.arange(grid.Nr), np.arange(grid.Ntheta))
        lam = 0.0
        for _ in range(iters):
            y = filt(polar_laplacian(x, grid))
            lam = float(np.sqrt(np.sum(y * y) / np.sum(x * x)))
            x = y / np.max(np.abs(y))
        _RADIUS_CACHE[key] = 1.02 * lam
    return _RADIUS_CACHE[key]


def stable_dt(grid, model):
    """Largest RK4 step allowed for the filtered diffusion operator, with a 0.9 safety factor."""
    dmax = max(model.d1, model.d2)
    return 0.9 * RK4_REAL_LIMIT / (dmax * diffusion_radius(grid))


def snap_dt(dt, tau):
    """Shrink dt so tau / dt is an integer of at least 2."""
    if tau <= 0:
        return dt, 0
    n = max(2, math.ceil(tau / dt - 1e-9))
    return tau / n, n


@dataclass
class InitialCondition:
    u: object
    v: object
    description: str = ""

    def sample(self, t, grid):
        return (np.asarray(self.u(t, grid.rr, grid.tt), float) * np.ones(grid.shape),
                np.asarray(self.v(t, grid.rr, grid.tt), float) * np.ones(grid.shape))


_TRIG = {"cos": np.cos, "sin": np.sin, "one": np.ones_like}


def _safe_expr(expr):
    names = {k: getattr(np, k) for k in ("cos", "sin", "exp", "log", "sqrt", "pi", "tanh", "abs")}
    code = compile(expr, "<initial>", "eval")
    for n in code.co_names:
        if n not in names and n not in ("t", "r", "theta"):
            raise ValueError(f"name {n!r} not allowed in initial expression")
    return lambda t, r, theta: eval(code, {"__builtins__": {}}, {**names, "t": t, "r": r, "theta": theta})


def initial_condition(kind="perturbed_cos", amplitude=0.01, phase_shift=0.0, equilibrium=(0.0, 0.0),
                      u_trig=None, v_trig=None, expr_u=None, expr_v=None):
    """History u* + eps cos t cos r trig(theta + shift) (and the same for v).

    kind 'perturbed_cos' / 'perturbed_sin' set the trig factor of both
    components, 'perturbed_radial' drops it (factor 1); u_trig / v_trig
    override it per component. kind 'custom' takes numpy expressions in
    t, r, theta.
    """
    us, vs = equilibrium
    if kind == "custom":
        if expr_u is None or expr_v is None:
            raise ValueError("custom initial condition needs expr_u and expr_v")
        return InitialCondition(_safe_expr(expr_u), _safe_expr(expr_v), f"custom u={expr_u}; v={expr_v}")
    if kind not in ("perturbed_cos", "perturbed_sin", "perturbed_radial"):
        raise ValueError(f"unknown initial condition kind {kind!r}")
    base = {"perturbed_cos": "cos", "perturbed_sin": "sin", "perturbed_radial": "one"}[kind]
    tu = _TRIG[u_trig or base]
    tv = _TRIG[v_trig or base]
    eps = amplitude
    u = lambda t, r, th: us + eps * np.cos(t) * np.cos(r) * tu(th + phase_shift)
    v = lambda t, r, th: vs + eps * np.cos(t) * np.cos(r) * tv(th + phase_shift)
    return InitialCondition(u, v, f"{u_trig or base}/{v_trig or base} eps={eps} shift={phase_shift}")


class History:
    """Ring buffer of past (u, v) slices; lag k is the state k steps back."""

    def __init__(self, depth, shape, keep, transform_u=None):
        self.depth = depth
        self.keep = keep
        self.transform_u = transform_u
        self.buf = [np.zeros((depth,) + shape) if k else None for k in keep]
        self.head = -1

    def push(self, u, v):
        self.head = (self.head + 1) % self.depth
        if self.buf[0] is not None:
            self.buf[0][self.head] = u if self.transform_u is None else self.transform_u(u)
        if self.buf[1] is not None:
            self.buf[1][self.head] = v

    def lag(self, k):
        i = (self.head - k) % self.depth
        return tuple(b[i] if b is not None else None for b in self.buf)

    def copy(self):
        h = History.__new__(History)
        h.depth, h.keep, h.head, h.transform_u = self.depth, self.keep, self.head, self.transform_u
        h.buf = [b.copy() if b is not None else None for b in self.buf]
        return h


@dataclass
class FieldState:
    u: np.ndarray
    v: np.ndarray
    t: float
    history: History
    step_index: int = 0

    def copy(self):
        return FieldState(self.u.copy(), self.v.copy(), self.t, self.history.copy(), self.step_index)


def _catmull_mid(a, b, c, d):
    # value halfway between b and c on the Catmull-Rom spline through a, b, c, d
    return (-a + 9.0 * b + 9.0 * c - d) / 16.0


class Simulator:
    def __init__(self, model, tau, grid, dt=None, use_numba=None, check_cfl=True):
        self.model, self.grid = model, grid
        self.tau = float(tau)
        if self.tau < 0:
            raise ValueError("tau must be nonnegative")
        limit = stable_dt(grid, model)
        dt = limit if dt is None else float(dt)
        if check_cfl and dt > limit * (1 + 1e-12):
            raise ValueError(f"dt={dt} exceeds the stability bound {limit:.6g}")
        self.dt, self.n_lag = snap_dt(dt, self.tau)
        self.store_u = None
        if model.kernel in _kernels.NUMPY_KERNELS:
            self.pvec = self._param_vector()
            self.kernel = _kernels.get_kernel(model.kernel, self.pvec, use_numba)
            self.keep = _kernels.DELAYED[model.kernel] if self.tau > 0 else (False, False)
            self.store_u = _kernels.stored_u(model.kernel, self.pvec)
        else:
            self.kernel = None
            self.keep = (True, True) if self.tau > 0 else (False, False)
        self.filter = RingFilter(grid)
        self._axpy, self._rk4 = _kernels.combiners(use_numba)
        self._su = np.empty(grid.shape)
        self._sv = np.empty(grid.shape)

    def _param_vector(self):
        p = self.model.params
        keys = {"brusselator": ("a", "b", "g"), "predprey": ("b", "K", "a", "d", "e", "alpha")}
        return np.array([p[k] for k in keys[self.model.kernel]], float)

    def rhs(self, u, v, ud, vd):
        g, m = self.grid, self.model
        mean_u = g.mean(u) if m.nonlocal_mean else 0.0
        j0 = self.filter.rows
        if self.kernel is not None:
            if ud is None and self.store_u is not None:
                ud = self.store_u(u)
            fu, fv = self.kernel(u, v, ud if ud is not None else u, vd if vd is not None else v,
                                 mean_u, g.r, g.dr, g.dtheta, m.d1, m.d2, j0)
        else:
            uh = mean_u if m.nonlocal_mean else u
            lap = lambda f: _kernels.laplacian_np(f, g.r, g.dr, g.dtheta, j0)
            fu = m.d1 * lap(u) + m.reaction_1(u, v, uh)
            fv = m.d2 * lap(v) + m.reaction_2(u, v, ud if ud is not None else u,
                                              vd if vd is not None else v)
        return self.filter.add_angular_pair(np.asarray(fu, float), np.asarray(fv, float), u, v, m.d1, m.d2)

    def init_state(self, initial):
        g = self.grid
        u0, v0 = initial.sample(0.0, g)
        hist = History(self.n_lag + 2 if self.tau > 0 else 1, g.shape, self.keep, self.store_u)
        if self.tau > 0:
            for k in range(self.n_lag + 1, 0, -1):
                uk, vk = initial.sample(-k * self.dt, g)
                hist.push(uk, vk)
        hist.push(u0, v0)
        return FieldState(u0, v0, 0.0, hist, 0)

    def _delayed(self, hist):
        if self.tau == 0:
            return None
        N = self.n_lag
        d0 = hist.lag(N)
        d1 = hist.lag(N - 1)
        a, b, c, d = hist.lag(N + 1), d0, d1, hist.lag(N - 2)
        dh = tuple(_catmull_mid(a[i], b[i], c[i], d[i]) if b[i] is not None else None for i in range(2))
        return d0, dh, d1

    def step(self, state):
        dt = self.dt
        u, v = state.u, state.v
        axpy, rk4 = self._axpy, self._rk4
        su, sv = self._su, self._sv
        dl = self._delayed(state.history)
        if dl is None:
            d0 = dh = d1 = (None, None)
        else:
            d0, dh, d1 = dl
        k1 = self.rhs(u, v, *d0)
        axpy(u, k1[0], 0.5 * dt, su)
        axpy(v, k1[1], 0.5 * dt, sv)
        k2 = self.rhs(su, sv, *dh)
        axpy(u, k2[0], 0.5 * dt, su)
        axpy(v, k2[1], 0.5 * dt, sv)
        k3 = self.rhs(su, sv, *dh)
        axpy(u, k3[0], dt, su)
        axpy(v, k3[1], dt, sv)
        k4 = self.rhs(su, sv, *d1)
        un = np.empty_like(u)
        vn = np.empty_like(v)
        rk4(u, k1[0], k2[0], k3[0], k4[0], dt, un)
        rk4(v, k1[1], k2[1], k3[1], k4[1], dt, vn)
        state.history.push(un, vn)
        state.u, state.v = un, vn
        state.step_index += 1
        state.t = state.step_index * dt
        return state


def step(state, model, tau, dt, grid):
    """One RK4 step (convenience wrapper; prefer Simulator for loops)."""
    return Simulator(model, tau, grid, dt).step(state)


@dataclass
class ModalSeries:
    modes: list
    times: list = field(default_factory=list)
    zc_u: dict = field(default_factory=dict)
    zs_u: dict = field(default_factory=dict)
    zc_v: dict = field(default_factory=dict)
    zs_v: dict = field(default_factory=dict)
    mean_u: list = field(default_factory=list)
    mean_v: list = field(default_factory=list)
    var_u: list = field(default_factory=list)
    var_v: list = field(default_factory=list)

    def arrays(self, key):
        return (np.array(self.times), np.array(self.zc_u[key]), np.array(self.zs_u[key]),
                np.array(self.zc_v[key]), np.array(self.zs_v[key]))


class Projector:
    def __init__(self, grid, modes):
        self.grid = grid
        self.modes = modes
        w = grid.cell_area()
        self.wc = {}
        self.ws = {}
        for md in modes:
            key = (md.n, md.m)
            self.wc[key] = w * np.conj(normalized_eigenfunction(md, grid.rr, grid.tt, "c"))
            self.ws[key] = w * np.conj(normalized_eigenfunction(md, grid.rr, grid.tt, "s"))

    def record(self, series, t, u, v):
        g = self.grid
        series.times.append(t)
        for md in self.modes:
            key = (md.n, md.m)
            for f, zc, zs in ((u, series.zc_u, series.zs_u), (v, series.zc_v, series.zs_v)):
                a = complex(np.sum(self.wc[key] * f))
                b = complex(np.sum(self.ws[key] * f))
                if abs(b - a.conjugate()) > 1e-9 * (1 + abs(a)) * (1 + float(np.max(np.abs(f)))):
                    raise SimulationError("projection consistency zs = conj(zc) violated")
                zc.setdefault(key, []).append(a)
                zs.setdefault(key, []).append(b)
        series.mean_u.append(g.mean(u))
        series.mean_v.append(g.mean(v))
        series.var_u.append(g.variance(u))
        series.var_v.append(g.variance(v))


@dataclass
class Trajectory:
    series: ModalSeries
    final: FieldState
    grid: PolarGrid
    dt: float
    steps: int
    snapshots: list = field(default_factory=list)


def run(model, tau, T_final, grid, dt=None, initial=None, modes=((0, 0), (1, 1)), sample_dt=0.25,
        snapshot_every=None, out_dir=None, use_numba=None, progress=None):
    """Integrate to T_final, sampling the ModalSeries every sample_dt time units.

    snapshot_every (time units) with out_dir writes binary snapshots there.
    """
    sim = Simulator(model, tau, grid, dt, use_numba)
    if initial is None:
        raise ValueError("an initial condition is required")
    state = sim.init_state(initial)
    mds = [mode_of(n, m, grid.R) for (n, m) in modes]
    proj = Projector(grid, mds)
    series = ModalSeries([(md.n, md.m) for md in mds])
    n_steps = int(round(T_final / sim.dt))
    every = max(1, int(round(sample_dt / sim.dt)))
    snap_every = max(1, int(round(snapshot_every / sim.dt))) if snapshot_every else 0
    snaps = []
    if out_dir and snap_every:
        os.makedirs(out_dir, exist_ok=True)

    def emit(state):
        if not (np.all(np.isfinite(state.u)) and np.all(np.isfinite(state.v))):
            raise SimulationError(f"non-finite field at t={state.t:.6g}")
        proj.record(series, state.t, state.u, state.v)

    emit(state)
    for i in range(1, n_steps + 1):
        sim.step(state)
        if i % every == 0:
            emit(state)
        if snap_every and out_dir and i % snap_every == 0:
            p = os.path.join(out_dir, f"snap_{i:09d}.bin")
            write_snapshot(p, grid, state.t, state.u, state.v)
            snaps.append(p)
        if progress and i % (every * 400) == 0:
            progress(state.t)
    return Trajectory(series, state, grid, sim.dt, n_steps, snaps)


@dataclass
class WaveClass:
    kind: str
    rho1: float
    rho2: float
    frequency: float
    mean_oscillation: float
    inhomogeneity: float
    floor: float
    periods: float
    notes: str = ""


def dominant_frequency(t, z):
    """Angular frequency of the strongest spectral peak (Hann window, zero padded)."""
    z = np.asarray(z) - np.mean(z)
    n = len(z)
    if n < 8:
        return float("nan")
    dt = t[1] - t[0]
    pad = 16 * n
    Z = np.abs(np.fft.fft(z * np.hanning(n), pad))
    f = np.fft.fftfreq(pad, dt)
    i = int(np.argmax(Z))
    if 0 < i < pad - 1:
        a, b, c = Z[i - 1], Z[i], Z[i + 1]
        den = a - 2 * b + c
        shift = 0.5 * (a - c) / den if den != 0 else 0.0
    else:
        shift = 0.0
    return float(2 * np.pi * abs(f[i] + shift * (f[1] - f[0])))


def counter_rotating_fit(t, z, w):
    """Least-squares amplitudes (|A|, |B|) of z(t) ~ A e^{iwt} + B e^{-iwt}.

    A fit at the measured frequency avoids the leakage between positive and
    negative frequency bins that a short FFT window suffers from.
    """
    if not np.isfinite(w) or w <= 0:
        return 0.0, 0.0
    M = np.stack([np.exp(1j * w * t), np.exp(-1j * w * t)], axis=1)
    c, *_ = np.linalg.lstsq(M, z, rcond=None)
    return float(abs(c[0])), float(abs(c[1]))


def classify_wave(series, mode=None, discard=0.6, noise_rel=1e-6):
    """Wave type over the trailing window of a ModalSeries."""
    t = np.array(series.times)
    if len(t) < 16:
        raise ValueError("series too short to classify")
    key = mode or next((k for k in series.modes if k[0] > 0), series.modes[0])
    sel = t >= t[0] + discard * (t[-1] - t[0])
    tw = t[sel]
    mean_u = np.array(series.mean_u)[sel]
    scale = max(abs(float(np.mean(mean_u))), 1e-12)
    floor = noise_rel * scale
    mean_osc = float(0.5 * (np.max(mean_u) - np.min(mean_u)))
    inhom = float(np.sqrt(np.max(np.array(series.var_u)[sel])))
    zc = np.array(series.zc_u[key])[sel]
    zc = zc - np.mean(zc)
    freq = dominant_frequency(tw, zc) if np.any(zc != 0) else float("nan")
    rho1, rho2 = counter_rotating_fit(tw, zc, freq)
    if inhom <= floor:
        freq = dominant_frequency(tw, mean_u)
    periods = (tw[-1] - tw[0]) * freq / (2 * np.pi) if np.isfinite(freq) else 0.0
    notes = "" if periods >= 5 else f"window covers only {periods:.1f} periods"
    if inhom <= floor:
        kind = "homogeneous_cycle" if mean_osc > floor else "steady"
        return WaveClass(kind, rho1, rho2, freq, mean_osc, inhom, floor, periods, notes)
    big, small = max(rho1, rho2), min(rho1, rho2)
    if big <= floor:
        return WaveClass("mixed", rho1, rho2, freq, mean_osc, inhom, floor, periods,
                         (notes + "; " if notes else "") + f"mode {key} below noise floor")
    if (big - small) / big < 0.2:
        kind = "standing"
    elif small == 0 or big / small > 5:
        # positive-frequency dominance: arg zc increases, pattern moves toward -theta
        kind = "rotating_cw" if rho1 > rho2 else "rotating_ccw"
    else:
        kind = "mixed"
    return WaveClass(kind, rho1, rho2, freq, mean_osc, inhom, floor, periods, notes)


# file formats

def write_snapshot(path, grid, t, u, v):
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<qqdd", grid.Nr, grid.Ntheta, grid.R, float(t)))
        fh.write(np.ascontiguousarray(u, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(v, dtype="<f8").tobytes())


def read_snapshot(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:6] != MAGIC:
        raise ValueError(f"{path}: not a snapshot file")
    Nr, Nt, R, t = struct.unpack("<qqdd", data[6:38])
    n = Nr * Nt
    arr = np.frombuffer(data[38:], dtype="<f8")
    if arr.size != 2 * n:
        raise ValueError(f"{path}: truncated snapshot")
    return PolarGrid(Nr, Nt, R), t, arr[:n].reshape(Nr, Nt).copy(), arr[n:].reshape(Nr, Nt).copy()


CSV_COLUMNS = ["t", "re_zc_u", "im_zc_u", "re_zs_u", "im_zs_u",
               "re_zc_v", "im_zc_v", "re_zs_v", "im_zs_v", "mean_u", "mean_v", "var_u", "var_v"]


def _fmt(x):
    return f"{x:.12g}"


def write_modal_csv(path, series, mode):
    t, zcu, zsu, zcv, zsv = series.arrays(mode)
    with open(path, "w") as fh:
        fh.write(",".join(CSV_COLUMNS) + "\n")
        for i in range(len(t)):
            row = [t[i], zcu[i].real, zcu[i].imag, zsu[i].real, zsu[i].imag,
                   zcv[i].real, zcv[i].imag, zsv[i].real, zsv[i].imag,
                   series.mean_u[i], series.mean_v[i], series.var_u[i], series.var_v[i]]
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _colormap(s):
    # blue -> white -> red
    s = np.clip(s, 0.0, 1.0)
    r = np.where(s < 0.5, 2 * s, 1.0)
    b = np.where(s < 0.5, 1.0, 2 * (1 - s))
    g = 1.0 - 2 * np.abs(s - 0.5)
    return np.stack([r, g, b], axis=-1)


def polar_to_cartesian(grid, f, size=256):
    """Bilinear resampling of a polar field onto a size x size square; NaN outside the disk."""
    x = np.linspace(-grid.R, grid.R, size)
    X, Y = np.meshgrid(x, -x)
    rad = np.hypot(X, Y)
    ang = np.mod(np.arctan2(Y, X), 2 * np.pi)
    fr = np.clip(rad / grid.dr - 0.5, 0.0, grid.Nr - 1.0)
    i0 = np.minimum(np.floor(fr).astype(int), grid.Nr - 2)
    wr = fr - i0
    ft = ang / grid.dtheta
    k0 = np.floor(ft).astype(int) % grid.Ntheta
    k1 = (k0 + 1) % grid.Ntheta
    wt = ft - np.floor(ft)
    out = ((1 - wr) * ((1 - wt) * f[i0, k0] + wt * f[i0, k1])
           + wr * ((1 - wt) * f[i0 + 1, k0] + wt * f[i0 + 1, k1]))
    out[rad > grid.R] = np.nan
    return out


def render_ppm(snapshot_path, out_dir, component="u", size=256):
    grid, t, u, v = read_snapshot(snapshot_path)
    f = u if component == "u" else v
    lo, hi = float(np.min(f)), float(np.max(f))
    img = polar_to_cartesian(grid, f, size)
    s = (img - lo) / (hi - lo) if hi > lo else np.full_like(img, 0.5)
    rgb = _colormap(np.nan_to_num(s, nan=0.5))
    rgb[np.isnan(img)] = 0.0
    pix = (255 * rgb + 0.5).astype(np.uint8)
    stem = os.path.splitext(os.path.basename(snapshot_path))[0]
    name = f"{stem}_{component}_min{lo:.6g}_max{hi:.6g}.ppm"
    path = os.path.join(out_dir, name)
    os.makedirs(out_dir, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{size} {size}\n255\n".encode())
        fh.write(pix.tobytes())
    return path
