"""Two-species delayed reaction-diffusion models and their Taylor data.

The first equation is u_t = d1 Lap u + F1(u, v, uhat), where uhat is the
disk mean of u (only used by nonlocal models, otherwise ignored). The second
is v_t = d2 Lap v + F2(u, v, u(t - tau), v(t - tau)).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class ModelSpec:
    name: str
    d1: float
    d2: float
    domain_R: float
    reaction_1: Callable
    reaction_2: Callable
    params: dict = field(default_factory=dict)
    nonlocal_mean: bool = False
    guess: tuple = (1.0, 1.0)
    analytic: Optional[Callable] = None
    kernel: str = "generic"

    def __post_init__(self):
        if not (self.d1 > 0 and self.d2 > 0):
            raise ValueError("diffusivities must be positive")
        if not self.domain_R > 0:
            raise ValueError("radius must be positive")

    @property
    def D(self):
        return np.diag([self.d1, self.d2])

    def with_params(self, **kw):
        builder = BUILTINS[self.kernel]
        p = dict(self.params)
        p.update(kw)
        return builder(**p)


@dataclass
class TaylorData:
    """Jacobians and derivative tables at an equilibrium.

    F1 holds partial derivatives of F1 in (u, v) with uhat frozen, F2 holds
    partials in (u, v, u_tau, v_tau). For nonlocal models c11 = dF1/duhat and
    nl_hess = (d2F1/du duhat, d2F1/dv duhat); F1_hom are the partials of
    F1(u, v, u), i.e. with uhat tied to u (what a spatially constant mode sees).
    """
    equilibrium: tuple
    a: np.ndarray
    b: np.ndarray
    c11: float
    F1: dict
    F2: dict
    D: np.ndarray
    nl_hess: tuple = (0.0, 0.0)
    F1_hom: Optional[dict] = None

    def A(self, with_mean=False):
        A = self.a.copy()
        if with_mean:
            A[0, 0] += self.c11
        return A

    def hessians(self, homogeneous=False):
        """Symmetric 4x4 Hessians of F1, F2 over (u, v, u_tau, v_tau)."""
        return _tensor(self.F1_hom if homogeneous and self.F1_hom else self.F1, self.F2, 2)

    def third(self, homogeneous=False):
        return _tensor(self.F1_hom if homogeneous and self.F1_hom else self.F1, self.F2, 3)


def _tensor(F1, F2, order):
    out = np.zeros((2,) + (4,) * order)
    for idx in itertools.product(range(4), repeat=order):
        cnt = [idx.count(k) for k in range(4)]
        if cnt[2] == 0 and cnt[3] == 0:
            out[(0,) + idx] = F1.get((cnt[0], cnt[1]), 0.0)
        out[(1,) + idx] = F2.get(tuple(cnt), 0.0)
    return out


def _residual(model, x):
    u, v = x
    return np.array([model.reaction_1(u, v, u), model.reaction_2(u, v, u, v)], dtype=float)


def find_equilibrium(model, guess=None, maxit=100):
    """Damped Newton on the zero-delay, spatially constant reaction system."""
    x = np.array(guess if guess is not None else model.guess, dtype=float)
    if np.any(x <= 0):
        raise ValueError("guess must lie in the positive quadrant")
    f = _residual(model, x)
    for _ in range(maxit):
        if np.max(np.abs(f)) < 1e-13:
            break
        J = np.empty((2, 2))
        for j in range(2):
            h = 1e-7 * max(1.0, abs(x[j]))
            e = np.zeros(2)
            e[j] = h
            J[:, j] = (_residual(model, x + e) - _residual(model, x - e)) / (2 * h)
        step = np.linalg.solve(J, -f)
        lam = 1.0
        while lam > 1e-6:
            xn = x + lam * step
            if np.all(np.isfinite(xn)):
                fn = _residual(model, xn)
                if np.all(np.isfinite(fn)) and np.linalg.norm(fn) < np.linalg.norm(f) * (1 - 1e-4 * lam) + 1e-300:
                    break
            lam *= 0.5
        x, f = xn, fn
    else:
        raise RuntimeError("equilibrium search did not converge in 100 iterations")
    if np.max(np.abs(f)) > 1e-12:
        raise RuntimeError("equilibrium search did not converge in 100 iterations")
    if np.any(x <= 0):
        raise ValueError(f"equilibrium {tuple(x)} is not positive")
    return float(x[0]), float(x[1])


# central-difference stencils for derivative orders 0..3
_STENCILS = {
    0: {0: 1.0},
    1: {-1: -0.5, 1: 0.5},
    2: {-1: 1.0, 0: -2.0, 1: 1.0},
    3: {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5},
}
_BASE_STEP = {1: 1e-3, 2: 1e-2, 3: 3e-2}


def fd_partial(f, x0, orders, scale=None):
    """Richardson-extrapolated central difference of a mixed partial."""
    x0 = np.asarray(x0, dtype=float)
    total = sum(orders)
    if total == 0:
        return f(*x0)
    scale = np.maximum(1.0, np.abs(x0)) if scale is None else scale

    def diff(h):
        acc = 0.0
        terms = [list(_STENCILS[o].items()) for o in orders]
        for combo in itertools.product(*terms):
            w = 1.0
            x = x0.copy()
            for k, (off, c) in enumerate(combo):
                w *= c
                x[k] += off * h[k]
            acc += w * f(*x)
        return acc / np.prod([h[k] ** orders[k] for k in range(len(orders))])

    h = _BASE_STEP[total] * scale
    d0, d1, d2 = diff(h), diff(h / 2), diff(h / 4)
    r1 = (4 * d1 - d0) / 3
    r2 = (4 * d2 - d1) / 3
    return (16 * r2 - r1) / 15


def _fd_taylor(model, eq):
    u, v = eq
    f1 = lambda uu, vv, uh: model.reaction_1(uu, vv, uh)
    f2 = lambda uu, vv, ud, vd: model.reaction_2(uu, vv, ud, vd)
    x1 = (u, v, u)
    x2 = (u, v, u, v)
    F1, F1h, F2 = {}, {}, {}
    for tot in (1, 2, 3):
        for i in range(tot + 1):
            j = tot - i
            F1[(i, j)] = fd_partial(f1, x1, (i, j, 0))
            F1h[(i, j)] = fd_partial(lambda uu, vv: f1(uu, vv, uu), (u, v), (i, j))
        for c in itertools.product(range(tot + 1), repeat=4):
            if sum(c) == tot:
                F2[c] = fd_partial(f2, x2, c)
    c11 = fd_partial(f1, x1, (0, 0, 1)) if model.nonlocal_mean else 0.0
    nl = (fd_partial(f1, x1, (1, 0, 1)), fd_partial(f1, x1, (0, 1, 1))) if model.nonlocal_mean else (0.0, 0.0)
    for d in (F1, F1h, F2):
        for k in list(d):
            if not np.isfinite(d[k]):
                raise ValueError("non-finite derivative from reaction callback")
    return F1, F1h, F2, c11, nl


def _assemble(model, eq, F1, F1h, F2, c11, nl):
    a = np.array([[F1[(1, 0)], F1[(0, 1)]],
                  [F2[(1, 0, 0, 0)], F2[(0, 1, 0, 0)]]], dtype=float)
    b = np.array([[0.0, 0.0], [F2[(0, 0, 1, 0)], F2[(0, 0, 0, 1)]]])
    hi1 = {k: v for k, v in F1.items() if sum(k) >= 2}
    hih = {k: v for k, v in F1h.items() if sum(k) >= 2}
    hi2 = {k: v for k, v in F2.items() if sum(k) >= 2}
    return TaylorData(tuple(eq), a, b, float(c11), hi1, hi2, model.D, tuple(nl), hih)


def taylor_expand(model, eq=None, analytic=True):
    """Jacobians and 2nd/3rd order partials at the equilibrium."""
    if eq is None:
        eq = find_equilibrium(model)
    res = _residual(model, np.array(eq))
    if np.max(np.abs(res)) > 1e-10:
        raise ValueError(f"not an equilibrium, residual {res}")
    if analytic and model.analytic is not None:
        parts = model.analytic(model.params, eq)
    else:
        parts = _fd_taylor(model, eq)
    return _assemble(model, eq, *parts)


def spatial_mean(u, weights):
    return float(np.sum(weights * u) / np.sum(weights))


# built-in models

def _bru_analytic(p, eq):
    u, v = eq
    b, g = p["b"], p["g"]
    F1 = {(1, 0): -(b + 1) + 2 * u * v, (0, 1): u * u,
          (2, 0): 2 * v, (1, 1): 2 * u, (0, 2): 0.0,
          (3, 0): 0.0, (2, 1): 2.0, (1, 2): 0.0, (0, 3): 0.0}
    F2 = {}
    for c in itertools.product(range(4), repeat=4):
        if 1 <= sum(c) <= 3:
            F2[c] = 0.0
    F2[(1, 0, 0, 0)] = b - 2 * u * v
    F2[(0, 1, 0, 0)] = -u * u - g
    F2[(0, 0, 0, 1)] = g
    F2[(2, 0, 0, 0)] = -2 * v
    F2[(1, 1, 0, 0)] = -2 * u
    F2[(2, 1, 0, 0)] = -2.0
    return F1, dict(F1), F2, 0.0, (0.0, 0.0)


def builtin_brusselator(a=1.0, b=1.5, g=2.0, d1=2.0, d2=5.0, R=10.0):
    """u_t = d1 Lap u + a - (b+1)u + u^2 v,
    v_t = d2 Lap v + b u - u^2 v + g (v(t-tau) - v)."""
    for k, val in dict(a=a, b=b, d1=d1, d2=d2, R=R).items():
        if not val > 0:
            raise ValueError(f"parameter {k} must be positive")
    if g < 0:
        raise ValueError("g must be nonnegative")
    r1 = lambda u, v, uh: a - (b + 1) * u + u * u * v
    r2 = lambda u, v, ud, vd: b * u - u * u * v + g * (vd - v)
    return ModelSpec("brusselator", d1, d2, R, r1, r2,
                     dict(a=a, b=b, g=g, d1=d1, d2=d2, R=R),
                     False, (a, b / a), _bru_analytic, "brusselator")


def _pp_analytic(p, eq):
    u, v = eq
    b, K, a, d, e, al = p["b"], p["K"], p["a"], p["d"], p["e"], p["alpha"]
    ua = u ** al
    F1 = {(1, 0): b * (1 - u / K) - a * al * ua / u * v,
          (0, 1): -a * ua,
          (2, 0): -a * al * (al - 1) * ua / u ** 2 * v,
          (1, 1): -a * al * ua / u,
          (0, 2): 0.0,
          (3, 0): -a * al * (al - 1) * (al - 2) * ua / u ** 3 * v,
          (2, 1): -a * al * (al - 1) * ua / u ** 2,
          (1, 2): 0.0, (0, 3): 0.0}
    # with uhat tied to u: b u (1 - u/K) contributes -2b/K to F20
    F1h = dict(F1)
    F1h[(1, 0)] = F1[(1, 0)] - b * u / K
    F1h[(2, 0)] = F1[(2, 0)] - 2 * b / K
    F2 = {}
    for c in itertools.product(range(4), repeat=4):
        if 1 <= sum(c) <= 3:
            F2[c] = 0.0
    F2[(0, 1, 0, 0)] = -d + a * e * ua
    F2[(0, 0, 1, 0)] = a * e * al * ua / u * v
    F2[(0, 1, 1, 0)] = a * e * al * ua / u
    F2[(0, 0, 2, 0)] = a * e * al * (al - 1) * ua / u ** 2 * v
    F2[(0, 1, 2, 0)] = a * e * al * (al - 1) * ua / u ** 2
    F2[(0, 0, 3, 0)] = a * e * al * (al - 1) * (al - 2) * ua / u ** 3 * v
    c11 = -b * u / K
    return F1, F1h, F2, c11, (-b / K, 0.0)


def builtin_predprey(b=0.25, K=20.0, a=0.3, d=0.7, e=0.5, alpha=0.6, d1=0.3, d2=0.75, R=6.0):
    """u_t = d1 Lap u + b u (1 - uhat/K) - a u^alpha v,
    v_t = d2 Lap v - d v + a e u(t-tau)^alpha v, uhat = disk mean of u."""
    for k, val in dict(b=b, K=K, a=a, d=d, e=e, d1=d1, d2=d2, R=R).items():
        if not val > 0:
            raise ValueError(f"parameter {k} must be positive")
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")

    def r1(u, v, uh):
        return b * u * (1 - uh / K) - a * np.exp(alpha * np.log(np.maximum(u, 1e-12))) * v

    def r2(u, v, ud, vd):
        return -d * v + a * e * np.exp(alpha * np.log(np.maximum(ud, 1e-12))) * v

    us = (d / (a * e)) ** (1 / alpha)
    vs = b * us * (1 - us / K) / (a * us ** alpha)
    return ModelSpec("predprey", d1, d2, R, r1, r2,
                     dict(b=b, K=K, a=a, d=d, e=e, alpha=alpha, d1=d1, d2=d2, R=R),
                     True, (us * 1.05, max(vs, 1e-3) * 0.95), _pp_analytic, "predprey")


BUILTINS = {"brusselator": builtin_brusselator, "predprey": builtin_predprey}


def builtin(name, **params):
    if name not in BUILTINS:
        raise KeyError(f"unknown model {name!r}")
    return BUILTINS[name](**params)


def linear_model(A, B, d1=1.0, d2=1.0, R=1.0, eq=(1.0, 1.0)):
    """Affine test model with given Jacobians (B acts on the delayed state)."""
    A = np.asarray(A, float)
    B = np.asarray(B, float)
    u0, v0 = eq

    def r1(u, v, uh):
        return A[0, 0] * (u - u0) + A[0, 1] * (v - v0)

    def r2(u, v, ud, vd):
        return (A[1, 0] * (u - u0) + A[1, 1] * (v - v0)
                + B[1, 0] * (ud - u0) + B[1, 1] * (vd - v0))

    return ModelSpec("linear", d1, d2, R, r1, r2, {}, False, eq, None, "generic")


def equilibrium_residual(model, eq):
    return float(np.max(np.abs(_residual(model, np.array(eq)))))

