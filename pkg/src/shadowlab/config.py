"""Experiment configuration: TOML files with defaults, validation and canonical round-trip."""
from __future__ import annotations

import copy
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

from .errors import ConfigError
from .shadowing import EstimateConfig, SearchConfig

__all__ = ["OPERATIONS", "DEFAULTS", "normalize", "loads", "load", "dumps", "delta_schedule",
           "estimate_config", "search_config"]

OPERATIONS = ("verify", "estimate-point", "estimate-set", "recurrence", "suspension-check", "lorenz-falsify")

REQUIRED = object()

# every accepted key with its default; REQUIRED marks mandatory keys and None marks optional ones
DEFAULTS = {
    "seed": REQUIRED,
    "operation": REQUIRED,
    "output": "shadowlab-out",
    "model": {"name": REQUIRED, "params": {}},
    "schedules": {
        "eps": [0.1],
        "delta": None,
        "delta_start_factor": 0.5,
        "delta_ratio": 0.5,
        "delta_min": 1e-4,
        "T": [1.0],
    },
    "sampling": {"count": 10, "points": None},
    "estimate": {
        "trials": 20,
        "n_forward": 6,
        "n_backward": 6,
        "t_range": [1.0, 2.0],
        "adversarial_trials": None,
        "adversarial_reach": 0.0,
        "adversarial_span": 0.0,
        "max_steps": 4000,
        "forward_only": False,
    },
    "search": {
        "dt": None,
        "grid_spacing": None,
        "time_stretch": 2.0,
        "time_pad": 1.0,
        "block_rows": 64,
        "max_cells": 4e8,
        "exhaustive": False,
    },
    "recurrence": {
        "rho": 0.005,
        "delta": 0.01,
        "samples_per_box": 4,
        "horizon": 1000.0,
        "eps_dense": 0.05,
        "starts": 20,
        "targets": 200,
        "nonwandering_samples": 40,
        "nonwandering_t_max": 50.0,
        "eps_nbhd": 0.05,
    },
    "suspension": {"heights": [0.25, 0.5, 0.75], "fiber_count": 10, "fiber_heights": [0.1, 0.4, 0.7, 0.9]},
    "lorenz": {"points": 10, "eps": 0.05, "delta": 1e-3, "returns": 30, "grid_factor": 0.2, "controls": True},
    "expect": {
        "all_pass": None,
        "all_fail": None,
        "chain_transitive": None,
        "transitive": None,
        "sh_all_fail": None,
        "min_agreement": None,
    },
}

_FREE_TABLES = {("model", "params")}

# value types of optional keys, given by a prototype value
_OPTIONAL = {
    "schedules.delta": [0.0],
    "estimate.adversarial_trials": 0,
    "search.dt": 0.0,
    "search.grid_spacing": 0.0,
    "expect.all_pass": False,
    "expect.all_fail": False,
    "expect.chain_transitive": False,
    "expect.transitive": False,
    "expect.sh_all_fail": False,
    "expect.min_agreement": 0.0,
}


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _check_type(path: str, default, value):
    if default is None:
        default = _OPTIONAL.get(path)
    if default is REQUIRED or default is None:
        return value
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path} must be true or false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path} must be an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if not _is_number(value):
            raise ConfigError(f"{path} must be a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path} must be a string, got {value!r}")
        return value
    if isinstance(default, list):
        if not isinstance(value, list) or not all(_is_number(v) for v in value):
            raise ConfigError(f"{path} must be a list of numbers, got {value!r}")
        return [float(v) for v in value]
    return value


def _merge(defaults: dict, raw: dict, prefix: str = "") -> dict:
    out = {}
    for key in raw:
        if key not in defaults:
            where = f"{prefix}{key}"
            raise ConfigError(f"unknown key {where!r}; accepted here: {', '.join(sorted(defaults))}")
    for key, default in defaults.items():
        path = f"{prefix}{key}"
        if isinstance(default, dict):
            sub = raw.get(key, {})
            if not isinstance(sub, dict):
                raise ConfigError(f"{path} must be a table")
            if tuple(path.split(".")) in _FREE_TABLES:
                out[key] = copy.deepcopy(sub)
            else:
                out[key] = _merge(default, sub, path + ".")
            continue
        if key in raw:
            out[key] = _check_type(path, default, raw[key])
        elif default is REQUIRED:
            raise ConfigError(f"missing required key {path!r}")
        elif default is not None:
            out[key] = copy.deepcopy(default)
    return out


def _strict(seq, increasing: bool) -> bool:
    return all((b > a) if increasing else (b < a) for a, b in zip(seq, seq[1:]))


def _validate(cfg: dict) -> dict:
    if not isinstance(cfg["seed"], int) or isinstance(cfg["seed"], bool):
        raise ConfigError(f"seed must be an integer, got {cfg['seed']!r}")
    if cfg["operation"] not in OPERATIONS:
        raise ConfigError(f"operation must be one of {', '.join(OPERATIONS)}; got {cfg['operation']!r}")
    if not isinstance(cfg["model"]["name"], str):
        raise ConfigError("model.name must be a string")
    sch = cfg["schedules"]
    for key, inc in (("eps", True), ("delta", False), ("T", True)):
        seq = sch.get(key)
        if seq is None:
            continue
        if not seq:
            raise ConfigError(f"schedules.{key} must not be empty")
        if any(v <= 0 for v in seq):
            raise ConfigError(f"schedules.{key} must be strictly positive, got {seq}")
        if not _strict(seq, inc):
            order = "increasing" if inc else "decreasing"
            raise ConfigError(f"schedules.{key} must be strictly {order}, got {seq}")
    if not 0 < sch["delta_ratio"] < 1:
        raise ConfigError("schedules.delta_ratio must lie in (0, 1)")
    if sch["delta_start_factor"] <= 0 or sch["delta_min"] <= 0:
        raise ConfigError("schedules.delta_start_factor and schedules.delta_min must be positive")
    t_range = cfg["estimate"]["t_range"]
    if len(t_range) != 2 or not 0 < t_range[0] <= t_range[1]:
        raise ConfigError(f"estimate.t_range must be [t_min, t_max] with 0 < t_min <= t_max, got {t_range}")
    if cfg["estimate"]["trials"] < 1 or cfg["estimate"]["n_forward"] < 1:
        raise ConfigError("estimate.trials and estimate.n_forward must be at least 1")
    pts = cfg["sampling"].get("points")
    if pts is not None:
        if not isinstance(pts, list) or not all(isinstance(p, list) and all(_is_number(c) for c in p) for p in pts):
            raise ConfigError("sampling.points must be a list of coordinate lists")
        cfg["sampling"]["points"] = [[float(c) for c in p] for p in pts]
    if cfg["sampling"]["count"] < 1:
        raise ConfigError("sampling.count must be at least 1")
    return cfg


def normalize(raw: dict) -> dict:
    """Fill defaults, coerce numbers and validate; raises ConfigError with the offending key."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a table")
    # sampling.points is a list of lists, which the scalar type check does not cover
    raw = copy.deepcopy(raw)
    pts = raw.get("sampling", {}).pop("points", None) if isinstance(raw.get("sampling"), dict) else None
    cfg = _merge(DEFAULTS, raw)
    if pts is not None:
        cfg["sampling"]["points"] = pts
    return _validate(cfg)


def loads(text: str) -> dict:
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"configuration is not valid TOML: {exc}") from None
    return normalize(raw)


def load(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"configuration file {str(p)!r} not found")
    return loads(p.read_text(encoding="utf-8"))


def dumps(cfg: dict) -> str:
    """Canonical TOML: keys sorted, every default written out."""

    def sort(d):
        return {k: sort(v) if isinstance(v, dict) else v for k, v in sorted(d.items())}

    return tomli_w.dumps(sort(cfg))


def delta_schedule(cfg: dict, eps: float) -> list:
    """Explicit ``schedules.delta`` or ``eps * start_factor * ratio^k`` down to exactly ``delta_min``."""
    sch = cfg["schedules"]
    if sch.get("delta") is not None:
        return list(sch["delta"])
    d = eps * sch["delta_start_factor"]
    lo = sch["delta_min"]
    out = []
    while d > lo * (1 + 1e-9):
        out.append(d)
        d *= sch["delta_ratio"]
    out.append(lo)
    return out


def estimate_config(cfg: dict) -> EstimateConfig:
    e = cfg["estimate"]
    return EstimateConfig(trials=e["trials"], n_forward=e["n_forward"], n_backward=e["n_backward"],
                          t_range=tuple(e["t_range"]), adversarial_trials=e.get("adversarial_trials"),
                          adversarial_reach=e["adversarial_reach"], adversarial_span=e["adversarial_span"],
                          max_steps=e["max_steps"], forward_only=e["forward_only"])


def search_config(cfg: dict) -> SearchConfig:
    s = cfg["search"]
    return SearchConfig(dt=s.get("dt"), grid_spacing=s.get("grid_spacing"), time_stretch=s["time_stretch"],
                        time_pad=s["time_pad"], block_rows=s["block_rows"], max_cells=s["max_cells"],
                        exhaustive=s["exhaustive"])
