"""Canned end-to-end runs for the two built-in examples.

Used by the `reproduce` subcommand and by the acceptance tests, so both
compare the same numbers against the same targets.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .model import builtin, find_equilibrium, taylor_expand
from .normal_form import classify, normal_form, standard_hopf_n0
from .simulator import PolarGrid, classify_wave, initial_condition, run
from .spectrum import bifurcation_curves, count_unstable_roots, min_hopf

# (u trig, v trig, angular shift) of the perturbation eps cos t cos r trig(theta + shift)
PATTERN_INITIAL = {
    "cos_cos": ("cos", "cos", 0.0),
    "cos_cos_pi6": ("cos", "cos", math.pi / 6),
    "cos_cos_mpi2": ("cos", "cos", -math.pi / 2),
    "sin_cos": ("sin", "cos", 0.0),
    "cos_sin": ("cos", "sin", 0.0),
}
PATTERN_EXPECT = {"cos_cos": "standing", "cos_cos_pi6": "standing", "cos_cos_mpi2": "standing", "sin_cos": "rotating",
                 "cos_sin": "rotating"}

PREDPREY_TAU = 3.0
PREDPREY_EQ = (13.0320, 0.8108)
BRUSSELATOR_TAU = 2.0
BRUSSELATOR_EQ = (1.0, 1.5)

# reference targets and tolerances
TARGETS = {
    "bru_omega": (0.6166, 1e-3, "abs"),
    "bru_tau_hat": (0.7128, 1e-3, "abs"),
    "bru_a2": (-0.6920, 0.05, "rel"),
    "bru_a1a2": (-0.8264, 0.05, "rel"),
    "pp_tau_hat": (1.7825, 1e-3, "abs"),
    "pp_B11_re": (0.0021, 0.05, "rel_floor"),
    "pp_B11_im": (-0.0911, 0.05, "rel_floor"),
    "pp_B2001_re": (-0.1075, 0.05, "rel_floor"),
    "pp_B2001_im": (0.0745, 0.05, "rel_floor"),
    "pp_B1110_re": (-0.1813, 0.05, "rel_floor"),
    "pp_B1110_im": (0.1620, 0.05, "rel_floor"),
}
ABS_FLOOR = 0.002


@dataclass
class Check:
    name: str
    value: object
    target: object
    passed: bool
    detail: str = ""

    def line(self):
        v = f"{self.value:.12g}" if isinstance(self.value, float) else str(self.value)
        t = f"{self.target:.12g}" if isinstance(self.target, float) else str(self.target)
        return f"{'PASS' if self.passed else 'FAIL'} {self.name} = {v} (target {t}{'; ' + self.detail if self.detail else ''})"


def within(key, value):
    target, tol, kind = TARGETS[key]
    err = abs(value - target)
    if kind == "abs":
        return err <= tol
    if kind == "rel":
        return err <= tol * abs(target)
    return err <= max(tol * abs(target), ABS_FLOOR)


def numeric_check(key, value, label=None):
    target, tol, kind = TARGETS[key]
    desc = {"abs": f"+-{tol:g}", "rel": f"+-{100 * tol:g}%", "rel_floor": f"+-{100 * tol:g}% or {ABS_FLOOR:g}"}[kind]
    return Check(label or key, float(value), float(target), within(key, value), desc)


# Brusselator

def brusselator_analysis(n_max=4, m_max=4, tau_max=50.0):
    model = builtin("brusselator")
    td = taylor_expand(model, find_equilibrium(model))
    hp = min_hopf(td, n_max, m_max, tau_max, model.domain_R)
    std = standard_hopf_n0(td, hp)
    return model, td, hp, std


def brusselator_checks(n_max=4, m_max=4):
    model, td, hp, std = brusselator_analysis(n_max, m_max)
    out = [
        Check("bru_mode", f"({hp.mode.n},{hp.mode.m})", "(0,0)", (hp.mode.n, hp.mode.m) == (0, 0)),
        numeric_check("bru_omega", hp.omega),
        numeric_check("bru_tau_hat", hp.tau_hat),
        numeric_check("bru_a2", std.a2),
        numeric_check("bru_a1a2", std.a1 * std.a2),
        Check("bru_direction", std.direction, "supercritical", std.direction == "supercritical"),
        Check("bru_stable", std.stable, True, bool(std.stable)),
    ]
    info = {"a1": std.a1, "a2": std.a2, "B11": std.B11, "B2100": std.B2100, "c1_unit": std.c1_unit}
    return out, info


def brusselator_cycle_initial(amplitude=0.01, angular=False):
    """eps cos t cos r, optionally times cos theta; the default stays radially symmetric."""
    kind = "perturbed_cos" if angular else "perturbed_radial"
    return initial_condition(kind, amplitude, 0.0, BRUSSELATOR_EQ)


def brusselator_cycle_run(T_final=400.0, Nr=64, Ntheta=128, use_numba=None, initial=None):
    model = builtin("brusselator")
    grid = PolarGrid(Nr, Ntheta, model.domain_R)
    tr = run(model, BRUSSELATOR_TAU, T_final, grid, initial=initial or brusselator_cycle_initial(),
             modes=((0, 0), (1, 1)), use_numba=use_numba)
    return tr, classify_wave(tr.series, (1, 1))


# predator-prey

def predprey_analysis(n_max=4, m_max=4, tau_max=50.0, K=20, **params):
    model = builtin("predprey", **params)
    td = taylor_expand(model, find_equilibrium(model))
    hp = min_hopf(td, n_max, m_max, tau_max, model.domain_R)
    nf = normal_form(td, hp, K) if hp.mode.n >= 1 else None
    return model, td, hp, nf


def predprey_checks(K=20):
    model, td, hp, nf = predprey_analysis(K=K)
    out = [
        Check("pp_mode", f"({hp.mode.n},{hp.mode.m})", "(1,1)", (hp.mode.n, hp.mode.m) == (1, 1)),
        numeric_check("pp_tau_hat", hp.tau_hat),
        Check("pp_double", hp.double, True, bool(hp.double)),
    ]
    if nf is None:
        return out, {}
    for name in ("B11", "B2001", "B1110"):
        z = getattr(nf, name)
        out.append(numeric_check(f"pp_{name}_re", z.real, f"pp_{name}.re"))
        out.append(numeric_check(f"pp_{name}_im", z.imag, f"pp_{name}.im"))
    a2, a3 = nf.a2, nf.a3
    out += [
        Check("pp_sign_a2", a2 < 0, True, a2 < 0, f"a2 = {a2:.6g}"),
        Check("pp_sign_a2+a3", a2 + a3 < 0, True, a2 + a3 < 0, f"a2+a3 = {a2 + a3:.6g}"),
        Check("pp_sign_a2-a3", a2 - a3 > 0, True, a2 - a3 > 0, f"a2-a3 = {a2 - a3:.6g}"),
        Check("pp_case", nf.case_label, 2, nf.case_label == 2),
    ]
    mu = PREDPREY_TAU - hp.tau_hat
    preds = {p.kind: p for p in classify(nf, mu)}
    sw = preds.get("standing")
    rw = [preds.get("rotating_plus"), preds.get("rotating_minus")]
    out.append(Check("pp_standing_exists_unstable", sw is not None and sw.exists and not sw.stable, True,
                     sw is not None and sw.exists and not sw.stable, f"mu = {mu:.6g}"))
    ok = all(p is not None and p.exists and p.stable for p in rw)
    out.append(Check("pp_rotating_exist_stable", ok, True, ok))
    return out, {"nf": nf, "hp": hp, "mu": mu, "predictions": preds}


def pattern_initial(name, amplitude=0.01):
    tu, tv, shift = PATTERN_INITIAL[name]
    return initial_condition("perturbed_cos", amplitude, shift, PREDPREY_EQ, u_trig=tu, v_trig=tv)


def pattern_run(name, T_final=400.0, Nr=64, Ntheta=128, use_numba=None, tau=PREDPREY_TAU):
    model = builtin("predprey")
    grid = PolarGrid(Nr, Ntheta, model.domain_R)
    tr = run(model, tau, T_final, grid, initial=pattern_initial(name), modes=((0, 0), (1, 1)),
             use_numba=use_numba)
    return tr, classify_wave(tr.series, (1, 1))


def pattern_checks(names=("cos_cos", "sin_cos", "cos_sin"), T_final=400.0, Nr=64, Ntheta=128, use_numba=None):
    out = []
    kinds = {}
    for name in names:
        t0 = time.perf_counter()
        _, wc = pattern_run(name, T_final, Nr, Ntheta, use_numba)
        kinds[name] = wc.kind
        want = PATTERN_EXPECT[name]
        ok = wc.kind.startswith(want)
        out.append(Check(f"{name}_wave", wc.kind, want, ok,
                         f"rho1={wc.rho1:.3g} rho2={wc.rho2:.3g} {time.perf_counter() - t0:.0f}s"))
    if "sin_cos" in kinds and "cos_sin" in kinds:
        ok = (kinds["sin_cos"].startswith("rotating") and kinds["cos_sin"].startswith("rotating")
              and kinds["sin_cos"] != kinds["cos_sin"])
        out.append(Check("sin_cos_vs_cos_sin_opposite", f"{kinds['sin_cos']}/{kinds['cos_sin']}", "opposite", ok))
    return out


def near_onset(factors=(1.05, 1.1, 1.2), T_final=3500.0, Nr=16, Ntheta=32, amplitude=1.0, tail=0.1,
               use_numba=None):
    """Saturated (1,1) amplitude of the predator-prey system for tau = f * tau_hat.

    Returns (mu, amplitude, wave kind) per factor and the log-log slope of
    amplitude against mu. Amplitude is max |zc_u(1,1)| over the trailing
    `tail` fraction of the run.
    """
    model, td, hp, _ = predprey_analysis(n_max=2, m_max=2, tau_max=10.0, K=2)
    grid = PolarGrid(Nr, Ntheta, model.domain_R)
    rows = []
    for f in factors:
        tau = f * hp.tau_hat
        tr = run(model, tau, T_final, grid, initial=initial_condition("perturbed_cos", amplitude, 0.0, PREDPREY_EQ),
                 modes=((1, 1),), sample_dt=1.0, use_numba=use_numba)
        t, z = tr.series.arrays((1, 1))[:2]
        amp = float(np.max(np.abs(z[t >= t[-1] * (1 - tail)])))
        rows.append((tau - hp.tau_hat, amp, classify_wave(tr.series, (1, 1)).kind))
    mu = np.log([r[0] for r in rows])
    a = np.log([r[1] for r in rows])
    slope = float(np.polyfit(mu, a, 1)[0])
    return rows, slope, hp


def onset_frequency(factor=1.02, T_final=800.0, Nr=16, Ntheta=32, amplitude=0.01, use_numba=None):
    """Oscillation frequency of the (1,1) coefficient just past tau_hat, against the Hopf omega."""
    model, td, hp, _ = predprey_analysis(n_max=2, m_max=2, tau_max=10.0, K=2)
    grid = PolarGrid(Nr, Ntheta, model.domain_R)
    tr = run(model, factor * hp.tau_hat, T_final, grid,
             initial=initial_condition("perturbed_cos", amplitude, 0.0, PREDPREY_EQ), modes=((1, 1),),
             use_numba=use_numba)
    return classify_wave(tr.series, (1, 1)).frequency, float(hp.omega)


def alpha_sweep(lo=0.5, hi=0.7, steps=40, modes=((0, 0), (1, 1)), tau_max=50.0):
    fam = lambda a: builtin("predprey", alpha=a)
    vals = np.linspace(lo, hi, steps + 1)
    return bifurcation_curves(fam, vals, list(modes), tau_max)


def root_count_flip(td, hp, rel=0.02):
    """Unstable-root counts of the critical mode just below and just above tau_hat."""
    below = count_unstable_roots(td, hp.mode, hp.tau_hat * (1 - rel))
    above = count_unstable_roots(td, hp.mode, hp.tau_hat * (1 + rel))
    return below, above
