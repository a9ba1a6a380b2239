"""Strict INI-style run configuration.

Sections and keys are fixed; anything unknown is rejected so a typo never
silently falls back to a default.
"""
from __future__ import annotations

import configparser
import inspect
import math

from .model import BUILTINS


class ConfigError(ValueError):
    pass


# section -> {key: type}
SCHEMA = {
    "model": {"name": str},
    "params": None,  # free keys, validated against the chosen model
    "analysis": {"n_max": int, "m_max": int, "tau_max": float, "K": int, "nonlocal_all_0m": bool},
    "grid": {"Nr": int, "Ntheta": int},
    "simulation": {"tau": float, "T_final": float, "dt": float, "sample_dt": float,
                   "snapshot_every": float, "mode_n": int, "mode_m": int},
    "initial": {"kind": str, "amplitude": float, "phase_shift": float, "u_trig": str, "v_trig": str,
                "expr_u": str, "expr_v": str},
    "curves": {"param": str, "from": float, "to": float, "steps": int, "modes": str},
    "output": {"dir": str},
}

DEFAULTS = {
    "model": {"name": "predprey"},
    "params": {},
    "analysis": {"n_max": 4, "m_max": 4, "tau_max": 100.0, "K": 20, "nonlocal_all_0m": False},
    "grid": {"Nr": 64, "Ntheta": 128},
    "simulation": {"tau": 3.0, "T_final": 400.0, "dt": 0.0, "sample_dt": 0.25, "snapshot_every": 0.0,
                   "mode_n": 1, "mode_m": 1},
    "initial": {"kind": "perturbed_cos", "amplitude": 0.01, "phase_shift": 0.0, "u_trig": "", "v_trig": "",
                "expr_u": "", "expr_v": ""},
    "curves": {"param": "alpha", "from": 0.5, "to": 0.7, "steps": 40, "modes": "0,0;1,1"},
    "output": {"dir": "out"},
}

# extra sections written into run manifests; skipped on reading so a manifest is a valid config
MANIFEST_SECTIONS = ("run", "artifacts")

POSITIVE = {("grid", "Nr"), ("grid", "Ntheta"), ("analysis", "n_max"), ("analysis", "m_max"),
            ("analysis", "tau_max"), ("analysis", "K"), ("simulation", "T_final"), ("simulation", "sample_dt"),
            ("curves", "steps")}


def _convert(section, key, typ, raw):
    try:
        if typ is bool:
            low = str(raw).strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        val = typ(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"[{section}] {key}: cannot read {raw!r} as {typ.__name__}") from None
    if isinstance(val, float) and not math.isfinite(val):
        raise ConfigError(f"[{section}] {key}: must be finite")
    return val


def default_config():
    return {s: dict(v) for s, v in DEFAULTS.items()}


def load_config(path=None, text=None):
    """Parse a config file (or text) over the defaults; returns a nested dict."""
    cfg = default_config()
    if path is None and text is None:
        return validate(cfg)
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keep key case
    try:
        if text is not None:
            cp.read_string(text)
        else:
            with open(path) as fh:
                cp.read_file(fh)
    except (configparser.Error, OSError) as exc:
        raise ConfigError(f"cannot parse config: {exc}") from None
    for section in cp.sections():
        if section in MANIFEST_SECTIONS:
            continue
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        for key, raw in cp.items(section):
            if section == "params":
                cfg["params"][key] = _convert(section, key, float, raw)
                continue
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            cfg[section][key] = _convert(section, key, SCHEMA[section][key], raw)
    return validate(cfg)


def set_value(cfg, section, key, raw):
    if section == "params":
        cfg["params"][key] = _convert(section, key, float, raw)
        return
    if section not in SCHEMA or key not in SCHEMA[section]:
        raise ConfigError(f"unknown setting {section}.{key}")
    cfg[section][key] = _convert(section, key, SCHEMA[section][key], raw)


def validate(cfg):
    name = cfg["model"]["name"]
    if name not in BUILTINS:
        raise ConfigError(f"unknown model {name!r} (choose from {', '.join(BUILTINS)})")
    allowed = set(inspect.signature(BUILTINS[name]).parameters)
    for k in cfg["params"]:
        if k not in allowed:
            raise ConfigError(f"model {name} has no parameter {k!r}")
    for section, key in POSITIVE:
        if not cfg[section][key] > 0:
            raise ConfigError(f"[{section}] {key} must be positive")
    for key in ("tau", "dt", "snapshot_every"):
        if cfg["simulation"][key] < 0:
            raise ConfigError(f"[simulation] {key} must be nonnegative")
    for key in ("u_trig", "v_trig"):
        if cfg["initial"][key] not in ("", "cos", "sin", "one"):
            raise ConfigError(f"[initial] {key} must be cos, sin or one")
    if cfg["initial"]["kind"] not in ("perturbed_cos", "perturbed_sin", "perturbed_radial", "custom"):
        raise ConfigError("[initial] kind must be perturbed_cos, perturbed_sin, perturbed_radial or custom")
    if cfg["grid"]["Ntheta"] % 2:
        raise ConfigError("[grid] Ntheta must be even")
    if cfg["grid"]["Nr"] < 4:
        raise ConfigError("[grid] Nr must be at least 4")
    try:
        parse_modes(cfg["curves"]["modes"])
    except ValueError as exc:
        raise ConfigError(f"[curves] modes: {exc}") from None
    return cfg


def parse_modes(text):
    out = []
    for part in text.split(";"):
        part = part.strip()
        if not part:
            continue
        n, m = (int(x) for x in part.split(","))
        if n < 0 or m < 0 or (n > 0 and m == 0):
            raise ValueError(f"invalid mode ({n},{m})")
        out.append((n, m))
    if not out:
        raise ValueError("no modes given")
    return out


def dump_config(cfg):
    """Deterministic text form of a resolved config."""
    lines = []
    for section in SCHEMA:
        lines.append(f"[{section}]")
        for key in sorted(cfg[section]):
            val = cfg[section][key]
            if isinstance(val, float):
                val = f"{val:.12g}"
            lines.append(f"{key} = {val}")
        lines.append("")
    return "\n".join(lines)
