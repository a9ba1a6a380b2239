"""Command-line entry point: `diskhopf <subcommand> [options]`."""
from __future__ import annotations

import argparse
import hashlib
import inspect
import os
import sys
import time

import numpy as np

from . import pipelines
from .bessel_basis import neumann_roots
from .config import ConfigError, dump_config, load_config, parse_modes, set_value, validate
from .model import BUILTINS, builtin, find_equilibrium, taylor_expand
from .normal_form import classify, normal_form, standard_hopf_n0
from .simulator import (PolarGrid, SimulationError, classify_wave, initial_condition, render_ppm, run,
                        write_modal_csv)
from .spectrum import bifurcation_curves, candidate_modes, hopf_points, min_hopf

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class StageError(RuntimeError):
    def __init__(self, stage, exc):
        super().__init__(f"stage '{stage}' failed: {exc}")
        self.stage = stage
        self.exc = exc


def g12(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, complex):
        return f"{x.real:.12g}{x.imag:+.12g}i"
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12g}"
    return str(x)


class Run:
    """Output directory, artifact bookkeeping and the manifest."""

    def __init__(self, cfg, command, quiet=False):
        self.cfg = cfg
        self.command = command
        self.quiet = quiet
        self.out = cfg["output"]["dir"]
        self.artifacts = []
        os.makedirs(self.out, exist_ok=True)

    def path(self, name):
        p = os.path.join(self.out, name)
        os.makedirs(os.path.dirname(p), exist_ok=True)
        return p

    def add(self, path):
        self.artifacts.append(os.path.relpath(path, self.out))
        return path

    def write_text(self, name, text):
        p = self.path(name)
        with open(p, "w") as fh:
            fh.write(text)
        return self.add(p)

    def log(self, msg):
        if not self.quiet:
            print(msg, flush=True)

    def stage(self, name, fn, *args, **kw):
        try:
            return fn(*args, **kw)
        except (ConfigError, KeyboardInterrupt):
            raise
        except (ArithmeticError, RuntimeError, ValueError, np.linalg.LinAlgError, SimulationError) as exc:
            raise StageError(name, exc) from exc

    def manifest(self):
        lines = ["[run]", f"command = {self.command}", "", dump_config(self.cfg), "[artifacts]"]
        for rel in sorted(set(self.artifacts)):
            with open(os.path.join(self.out, rel), "rb") as fh:
                digest = hashlib.sha256(fh.read()).hexdigest()
            lines.append(f"{rel} = sha256:{digest}")
        p = os.path.join(self.out, "manifest")
        with open(p, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        return p


def _model(cfg):
    return builtin(cfg["model"]["name"], **cfg["params"])


def _taylor(model):
    return taylor_expand(model, find_equilibrium(model))


# subcommands

def cmd_eigen(cfg, args, rn):
    R = args.radius if args.radius is not None else _model(cfg).domain_R
    n_max, m_max = cfg["analysis"]["n_max"], cfg["analysis"]["m_max"]
    rows = ["n,m,alpha,lambda,norm_sq"]
    count = 0
    for n in range(n_max + 1):
        # m_max + 1 roots per angular index (n = 0 starts with the constant mode)
        for md in rn.stage("eigen", neumann_roots, n, m_max + 1, R):
            rows.append(",".join([str(md.n), str(md.m), g12(md.alpha), g12(md.lam), g12(md.norm_sq)]))
            count += 1
    rn.write_text("eigen.csv", "\n".join(rows) + "\n")
    rn.log(f"{count} modes written to {os.path.join(rn.out, 'eigen.csv')}")


def cmd_hopf(cfg, args, rn):
    model = _model(cfg)
    an = cfg["analysis"]
    td = rn.stage("equilibrium", _taylor, model)
    rows = ["n,m,lambda,omega,tau_hat,double,transversal"]
    for md in candidate_modes(an["n_max"], an["m_max"], model.domain_R):
        pts = rn.stage("hopf", hopf_points, td, md, an["tau_max"], an["nonlocal_all_0m"])
        if pts:
            h = pts[0]
            rows.append(",".join([str(md.n), str(md.m), g12(md.lam), g12(h.omega), g12(h.tau_hat),
                                  g12(h.double), str(h.transversal)]))
    rn.write_text("hopf.csv", "\n".join(rows) + "\n")
    hp = rn.stage("hopf", min_hopf, td, an["n_max"], an["m_max"], an["tau_max"], model.domain_R,
                  an["nonlocal_all_0m"])
    report = [f"model = {model.name}", f"equilibrium = {g12(td.equilibrium[0])},{g12(td.equilibrium[1])}",
              f"critical_mode = ({hp.mode.n},{hp.mode.m})", f"omega = {g12(hp.omega)}",
              f"tau_hat = {g12(hp.tau_hat)}", f"double = {g12(hp.double)}",
              f"transversal = {hp.transversal}", f"dgamma_dtau = {g12(hp.dgamma_dtau)}",
              f"tie = {g12(hp.tie)}"]
    rn.write_text("hopf.txt", "\n".join(report) + "\n")
    rn.log("\n".join(report))


def cmd_curves(cfg, args, rn):
    cv = cfg["curves"]
    base = cfg["model"]["name"]
    if cv["param"] not in model_params(base):
        raise ConfigError(f"model {base} has no parameter {cv['param']!r}")
    modes = parse_modes(cv["modes"])
    params = dict(cfg["params"])

    def family(x):
        return builtin(base, **{**params, cv["param"]: float(x)})

    vals = np.linspace(cv["from"], cv["to"], cv["steps"] + 1)
    rows, crossings = rn.stage("curves", bifurcation_curves, family, vals, modes, cfg["analysis"]["tau_max"],
                               cfg["analysis"]["nonlocal_all_0m"])
    head = ["kind", "param"] + [f"tau0_{n}_{m}" for (n, m) in modes]
    lines = [",".join(head)]
    for p, taus, ok in rows:
        lines.append(",".join(["curve", g12(p)] + [g12(t) for t in taus]))
    for p, t, i, j in crossings:
        taus = ["" for _ in modes]
        taus[i] = taus[j] = g12(t)
        lines.append(",".join(["HH", g12(p)] + taus))
    rn.write_text("curves.csv", "\n".join(lines) + "\n")
    rn.log(f"{len(rows)} parameter values, {len(crossings)} crossing(s)")
    for p, t, i, j in crossings:
        rn.log(f"HH at {cv['param']} = {g12(p)}, tau = {g12(t)} between {modes[i]} and {modes[j]}")


def model_params(name):
    return set(inspect.signature(BUILTINS[name]).parameters)


def normal_form_report(model, td, hp, K, nonlocal_all_0m, mu=None):
    lines = [f"model = {model.name}", f"critical_mode = ({hp.mode.n},{hp.mode.m})",
             f"omega = {g12(hp.omega)}", f"tau_hat = {g12(hp.tau_hat)}", f"double = {g12(hp.double)}"]
    if hp.mode.n == 0:
        std = standard_hopf_n0(td, hp, K, nonlocal_all_0m)
        lines += [f"B11 = {g12(std.B11)}", f"B2100 = {g12(std.B2100)}", f"c1_unit = {g12(std.c1_unit)}",
                  f"g20 = {g12(std.g20)}", f"g11 = {g12(std.g11)}", f"g02 = {g12(std.g02)}",
                  f"g21 = {g12(std.g21)}", f"a1 = {g12(std.a1)}", f"a2 = {g12(std.a2)}",
                  f"a1a2 = {g12(std.a1 * std.a2)}", f"direction = {std.direction}",
                  f"orbitally_stable = {g12(std.stable)}"]
        return lines, std
    nf = normal_form(td, hp, K, nonlocal_all_0m)
    b = nf.basis
    ig = nf.integrals
    lines += [f"p0 = {g12(complex(b.p0))}", f"q = {g12(complex(b.q))}", f"M22 = {g12(float(ig.M22))}",
              f"truncation_K = {nf.truncation_K}", f"tail_estimate = {g12(nf.tail_estimate)}",
              f"tail_warning = {g12(nf.tail_warning)}"]
    for fam, k, lam, M, e2001, e1110 in nf.terms:
        lines.append(f"term_{fam}_{k} = lambda {g12(lam)} M {g12(float(np.real(M)))} "
                     f"E2001 {g12(complex(e2001))} E1110 {g12(complex(e1110))}")
    for key in ("2001", "1110"):
        lines += [f"C{key} = {g12(nf.C[key])}", f"D{key} = {g12(nf.D[key])}", f"E{key} = {g12(nf.E[key])}"]
    lines += [f"B11 = {g12(nf.B11)}", f"B2001 = {g12(nf.B2001)}", f"B1110 = {g12(nf.B1110)}",
              f"B2100 = {g12(nf.B2100)}", f"B0120 = {g12(nf.B0120)}", f"B0021 = {g12(nf.B0021)}",
              f"B1011 = {g12(nf.B1011)}",
              f"a1 = {g12(nf.a1)}", f"a2 = {g12(nf.a2)}", f"a3 = {g12(nf.a3)}",
              f"a2_plus_a3 = {g12(nf.a2 + nf.a3)}", f"a2_minus_a3 = {g12(nf.a2 - nf.a3)}",
              f"case = {nf.case_label}"]
    if mu is not None:
        lines.append(f"mu = {g12(mu)}")
        for p in classify(nf, mu):
            lines.append(f"prediction_{p.kind} = exists {g12(p.exists)} stable {g12(p.stable)} "
                         f"amplitude {g12(p.amplitude)}")
    return lines, nf


def cmd_normal_form(cfg, args, rn):
    model = _model(cfg)
    an = cfg["analysis"]
    td = rn.stage("equilibrium", _taylor, model)
    hp = rn.stage("hopf", min_hopf, td, an["n_max"], an["m_max"], an["tau_max"], model.domain_R,
                  an["nonlocal_all_0m"])
    tau = cfg["simulation"]["tau"]
    lines, _ = rn.stage("normal-form", normal_form_report, model, td, hp, an["K"], an["nonlocal_all_0m"],
                        tau - hp.tau_hat if tau > 0 else None)
    rn.write_text("normal_form.txt", "\n".join(lines) + "\n")
    rn.log("\n".join(lines))


def _initial(cfg, eq):
    ic = cfg["initial"]
    return initial_condition(ic["kind"], ic["amplitude"], ic["phase_shift"], eq,
                             u_trig=ic["u_trig"] or None, v_trig=ic["v_trig"] or None,
                             expr_u=ic["expr_u"] or None, expr_v=ic["expr_v"] or None)


def cmd_simulate(cfg, args, rn):
    model = _model(cfg)
    sim = cfg["simulation"]
    eq = rn.stage("equilibrium", find_equilibrium, model)
    grid = PolarGrid(cfg["grid"]["Nr"], cfg["grid"]["Ntheta"], model.domain_R)
    key = (sim["mode_n"], sim["mode_m"])
    modes = [(0, 0)] + ([key] if key != (0, 0) else [])
    snap_dir = os.path.join(rn.out, "snapshots") if sim["snapshot_every"] else None
    progress = (lambda t: rn.log(f"t = {t:.1f}")) if not rn.quiet else None
    t0 = time.perf_counter()
    tr = rn.stage("simulate", run, model, sim["tau"], sim["T_final"], grid, sim["dt"] or None,
                  _initial(cfg, tuple(eq)), modes, sim["sample_dt"], sim["snapshot_every"] or None,
                  snap_dir, None, progress)
    for p in tr.snapshots:
        rn.add(p)
    for md in modes:
        write_modal_csv(rn.path(f"modal_{md[0]}_{md[1]}.csv"), tr.series, md)
        rn.add(rn.path(f"modal_{md[0]}_{md[1]}.csv"))
    wc = rn.stage("classify", classify_wave, tr.series, key)
    lines = [f"classification = {wc.kind}", f"mode = ({key[0]},{key[1]})", f"rho1 = {g12(wc.rho1)}",
             f"rho2 = {g12(wc.rho2)}", f"frequency = {g12(wc.frequency)}",
             f"mean_oscillation = {g12(wc.mean_oscillation)}", f"inhomogeneity = {g12(wc.inhomogeneity)}",
             f"noise_floor = {g12(wc.floor)}", f"periods_in_window = {g12(float(wc.periods))}",
             f"dt = {g12(tr.dt)}", f"steps = {tr.steps}", f"notes = {wc.notes}"]
    rn.write_text("classification.txt", "\n".join(lines) + "\n")
    rn.log("\n".join(lines))
    rn.log(f"elapsed {time.perf_counter() - t0:.1f} s")


def cmd_render(cfg, args, rn):
    if not os.path.isfile(args.snapshot):
        raise ConfigError(f"no such snapshot: {args.snapshot}")
    p = rn.stage("render", render_ppm, args.snapshot, rn.out, args.component, args.size)
    rn.add(p)
    rn.log(p)


def cmd_reproduce(cfg, args, rn):
    ex = args.example
    lines = [f"example = {ex}"]
    if ex == "brusselator":
        checks, info = rn.stage("normal-form", pipelines.brusselator_checks)
        lines += [f"a1_star = {g12(info['a1'])}", f"a2_star = {g12(info['a2'])}",
                  f"B11_star = {g12(info['B11'])}", f"B2100_star = {g12(info['B2100'])}",
                  f"c1_unit = {g12(info['c1_unit'])}"]
        if not args.no_sim:
            tr, wc = rn.stage("simulate", pipelines.brusselator_cycle_run, args.t_final,
                              cfg["grid"]["Nr"], cfg["grid"]["Ntheta"])
            write_modal_csv(rn.path("modal_0_0.csv"), tr.series, (0, 0))
            rn.add(rn.path("modal_0_0.csv"))
            ok = wc.kind == "homogeneous_cycle" and wc.inhomogeneity < 1e-6 * max(wc.mean_oscillation, 1e-300)
            checks.append(pipelines.Check("bru_tau2_wave", wc.kind, "homogeneous_cycle", ok,
                                          f"inhomogeneity {wc.inhomogeneity:.3g}, amplitude "
                                          f"{wc.mean_oscillation:.3g}"))
    else:
        checks, info = rn.stage("normal-form", pipelines.predprey_checks, cfg["analysis"]["K"])
        model, td, hp, nf = pipelines.predprey_analysis(K=cfg["analysis"]["K"])
        nf_lines, _ = normal_form_report(model, td, hp, cfg["analysis"]["K"], False, pipelines.PREDPREY_TAU - hp.tau_hat)
        rn.write_text("normal_form.txt", "\n".join(nf_lines) + "\n")
        rows, crossings = rn.stage("curves", pipelines.alpha_sweep)
        cl = ["kind,param,tau0_0_0,tau0_1_1"] + [f"curve,{g12(p)},{g12(t[0])},{g12(t[1])}" for p, t, ok in rows]
        cl += [f"HH,{g12(p)},{g12(t)},{g12(t)}" for p, t, i, j in crossings]
        rn.write_text("curves.csv", "\n".join(cl) + "\n")
        checks.append(pipelines.Check("alpha_sweep_crossings", len(crossings), 1, len(crossings) == 1))
        if not args.no_sim:
            checks += rn.stage("simulate", pipelines.pattern_checks, ("cos_cos", "sin_cos", "cos_sin"), args.t_final,
                               cfg["grid"]["Nr"], cfg["grid"]["Ntheta"])
    lines += [c.line() for c in checks]
    n_pass = sum(c.passed for c in checks)
    lines.append(f"summary = {n_pass} of {len(checks)} checks passed")
    rn.write_text("report.txt", "\n".join(lines) + "\n")
    rn.log("\n".join(lines))


COMMANDS = {"eigen": cmd_eigen, "hopf": cmd_hopf, "curves": cmd_curves, "normal-form": cmd_normal_form,
            "simulate": cmd_simulate, "render": cmd_render, "reproduce": cmd_reproduce}

# option dest -> (section, key)
OVERRIDES = {
    "model": ("model", "name"), "n_max": ("analysis", "n_max"), "m_max": ("analysis", "m_max"),
    "tau_max": ("analysis", "tau_max"), "K": ("analysis", "K"), "Nr": ("grid", "Nr"),
    "Ntheta": ("grid", "Ntheta"), "tau": ("simulation", "tau"), "T_final": ("simulation", "T_final"),
    "dt": ("simulation", "dt"), "sample_dt": ("simulation", "sample_dt"),
    "snapshot_every": ("simulation", "snapshot_every"), "param": ("curves", "param"),
    "p_from": ("curves", "from"), "p_to": ("curves", "to"), "steps": ("curves", "steps"),
    "modes": ("curves", "modes"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="INI-style run configuration")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS)

    ap = argparse.ArgumentParser(prog="diskhopf", parents=[common],
                                 description="Equivariant Hopf analysis and simulation on a disk.")
    sub = ap.add_subparsers(dest="command", required=True)

    def model_opts(p):
        p.add_argument("--model", choices=["brusselator", "predprey"])
        p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                       help="override any config entry, e.g. params.alpha=0.55")

    def analysis_opts(p):
        p.add_argument("--n-max", dest="n_max", type=int)
        p.add_argument("--m-max", dest="m_max", type=int)
        p.add_argument("--tau-max", dest="tau_max", type=float)

    p = sub.add_parser("eigen", parents=[common], help="Neumann eigenvalue table")
    model_opts(p)
    analysis_opts(p)
    p.add_argument("--radius", type=float)

    p = sub.add_parser("hopf", parents=[common], help="critical delays per mode")
    model_opts(p)
    analysis_opts(p)

    p = sub.add_parser("curves", parents=[common], help="first critical delay along a parameter sweep")
    model_opts(p)
    analysis_opts(p)
    p.add_argument("--param")
    p.add_argument("--from", dest="p_from", type=float)
    p.add_argument("--to", dest="p_to", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--modes", help="semicolon separated n,m pairs")

    p = sub.add_parser("normal-form", parents=[common], help="normal form coefficients and predictions")
    model_opts(p)
    analysis_opts(p)
    p.add_argument("--K", type=int)
    p.add_argument("--tau", type=float, help="delay used for the wave predictions (mu = tau - tau_hat)")

    p = sub.add_parser("simulate", parents=[common], help="integrate the delayed system on a polar grid")
    model_opts(p)
    p.add_argument("--tau", type=float)
    p.add_argument("--T-final", dest="T_final", type=float)
    p.add_argument("--Nr", type=int)
    p.add_argument("--Ntheta", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--sample-dt", dest="sample_dt", type=float)
    p.add_argument("--snapshot-every", dest="snapshot_every", type=float)

    p = sub.add_parser("render", parents=[common], help="snapshot to PPM image")
    p.add_argument("snapshot")
    p.add_argument("--component", choices=["u", "v"], default="u")
    p.add_argument("--size", type=int, default=256)

    p = sub.add_parser("reproduce", parents=[common], help="run a built-in example end to end")
    p.add_argument("example", choices=["brusselator", "predprey"])
    p.add_argument("--no-sim", action="store_true", help="skip the simulations")
    p.add_argument("--T-final", dest="t_final", type=float, default=400.0)
    return ap


def resolve(args):
    cfg = load_config(getattr(args, "config", None))
    for dest, (section, key) in OVERRIDES.items():
        val = getattr(args, dest, None)
        if val is not None:
            cfg[section][key] = val
    for item in getattr(args, "set", []) or []:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        lhs, raw = item.split("=", 1)
        section, key = lhs.split(".", 1)
        set_value(cfg, section, key, raw)
    if getattr(args, "out", None):
        cfg["output"]["dir"] = args.out
    if args.command == "reproduce":
        cfg["model"]["name"] = args.example
    return validate(cfg)


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    quiet = bool(getattr(args, "quiet", False))
    try:
        cfg = resolve(args)
        rn = Run(cfg, " ".join(["diskhopf"] + list(sys.argv[1:] if argv is None else argv)), quiet)
        COMMANDS[args.command](cfg, args, rn)
        rn.manifest()
    except ConfigError as exc:
        print(f"diskhopf: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"diskhopf: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
