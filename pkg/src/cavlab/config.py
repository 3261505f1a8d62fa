"""Run configuration: strict JSON parsing, defaults and validation."""
from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .models import MaterialModel, PenaltyModel, stress_free_c2

EXPERIMENTS = ("radial-classical", "radial-decoupled", "table1", "repulsion", "gamma-pair",
               "fluid2d")


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending key path."""


# section -> key -> (type, default). A default of None means "derived".
_SCHEMA = {
    "material": {"mu": (float, 1.0), "p": (float, 2.0), "c1": (float, 1.0), "c2": (float, None),
                 "gamma": (float, 2.0), "delta": (float, 2.0)},
    "penalty": {"eps2": (float, 1e-6), "tau": (float, 3.0), "alpha": (float, 2.0),
                "M": (float, 1e4)},
    "grid": {"m": (int, 100)},
    "mesh": {"n_rings": (int, 17), "jitter": (float, 0.2)},
    "optimizer": {"max_iter": (int, 50000), "grad_tol": (float, 1e-8), "step_tol": (float, 1e-12),
                  "memory": (int, 10), "nonmonotone_window": (int, 10)},
    "decoupled": {"core_cells": (int, 3), "warm": (bool, False)},
    "table1": {"eps2_list": (list, [1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10])},
    "repulsion": {"ns": (list, [2, 4, 8, 16])},
    "gamma_pair": {"deltas": (list, [0.2, 0.1, 0.05]), "beta1": (float, 5.0),
                   "quadrature": (str, "exact")},
    "flow": {"max_iter": (int, 5000), "update_tol": (float, 1e-4), "dt_u": (float, 0.05),
             "dt_v": (float, 1e-5), "damp": (bool, True), "solver": (str, "direct"),
             "init": (str, "zero"), "stop_on": (str, "velocity")},
}
_TOP = {"experiment": (str, None), "lambda": (float, 1.5), "out": (str, "results"),
        "seed": (int, 0)}

# the elastic-fluid runs use a different material by default; penalty and flow
# defaults depend on whether lam^2 is below d0 (compression) or above (expansion)
_FLUID_DEFAULTS = {
    "lambda": 0.8,
    "material": {"mu": 0.0, "c1": 1.0},
}
_FLUID_REGIME = {
    "compression": {"penalty": {"eps2": 1e-2, "tau": 3.0, "M": 1e4}, "mesh": {"n_rings": 17},
                    "flow": {"dt_u": 0.05, "dt_v": 1e-5, "init": "zero", "max_iter": 5000,
                             "update_tol": 1e-4}},
    "expansion": {"penalty": {"eps2": 1e-3, "tau": 1.0, "M": 100.0}, "mesh": {"n_rings": 27},
                  "flow": {"dt_u": 0.02, "dt_v": 3e-3, "init": "gaussian", "max_iter": 8000,
                           "update_tol": 1e-6}},
}


@dataclass
class RunConfig:
    experiment: str
    lam: float
    material: dict
    penalty: dict
    grid: dict
    mesh: dict
    optimizer: dict
    decoupled: dict
    table1: dict
    repulsion: dict
    gamma_pair: dict
    flow: dict
    out: str = "results"
    seed: int = 0
    sections: tuple = field(default=tuple(_SCHEMA), repr=False, compare=False)

    def material_model(self) -> MaterialModel:
        return MaterialModel(**self.material)

    def penalty_model(self, eps2: float | None = None) -> PenaltyModel:
        pen = self.penalty
        return PenaltyModel.from_eps2(pen["eps2"] if eps2 is None else eps2, tau=pen["tau"],
                                      alpha=pen["alpha"], M=pen["M"])

    def to_dict(self) -> dict:
        out = {"experiment": self.experiment, "lambda": self.lam, "out": self.out,
               "seed": self.seed}
        for name in _SCHEMA:
            out[name] = copy.deepcopy(getattr(self, name))
        return out


def _coerce(path, value, kind):
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean, got {value!r}")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        if not math.isfinite(value):
            raise ConfigError(f"{path}: must be finite")
        return float(value)
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if kind is list:
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{path}: expected a non-empty list")
        for i, item in enumerate(value):
            if isinstance(item, bool) or not isinstance(item, (int, float)):
                raise ConfigError(f"{path}[{i}]: expected a number, got {item!r}")
        return list(value)
    raise AssertionError(kind)


def _merge(raw: dict) -> dict:
    unknown = set(raw) - set(_TOP) - set(_SCHEMA)
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown key")
    exp = raw.get("experiment")
    if exp is None:
        raise ConfigError("experiment: missing required key")
    exp = _coerce("experiment", exp, str)
    if exp not in EXPERIMENTS:
        raise ConfigError(f"experiment: must be one of {', '.join(EXPERIMENTS)}, got {exp!r}")
    fluid = exp == "fluid2d"

    out = {}
    for key, (kind, default) in _TOP.items():
        if fluid and key in _FLUID_DEFAULTS:
            default = _FLUID_DEFAULTS[key]
        out[key] = _coerce(key, raw[key], kind) if key in raw else default
    for sec, keys in _SCHEMA.items():
        given = raw.get(sec, {})
        if not isinstance(given, dict):
            raise ConfigError(f"{sec}: expected an object")
        bad = set(given) - set(keys)
        if bad:
            raise ConfigError(f"{sec}.{sorted(bad)[0]}: unknown key")
        vals = {}
        for key, (kind, default) in keys.items():
            if fluid and key in _FLUID_DEFAULTS.get(sec, {}):
                default = _FLUID_DEFAULTS[sec][key]
            if fluid and key in _FLUID_REGIME["expansion"].get(sec, {}):
                default = None  # resolved once lambda and d0 are known
            if key in given and given[key] is not None:
                vals[key] = _coerce(f"{sec}.{key}", given[key], kind)
            else:
                vals[key] = copy.deepcopy(default)
        out[sec] = vals
    return out


def _check(cond, path, msg):
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def _validate(d: dict) -> None:
    mat = d["material"]
    _check(mat["mu"] >= 0, "material.mu", "must be >= 0")
    _check(1.0 <= mat["p"] < 3.0, "material.p", "must lie in [1, 3)")
    _check(mat["c1"] > 0, "material.c1", "must be > 0")
    _check(mat["gamma"] > 1, "material.gamma", "must be > 1")
    _check(mat["delta"] > 0, "material.delta", "must be > 0")
    if mat["c2"] is None:
        mat["c2"] = stress_free_c2(mat["mu"], mat["p"], mat["gamma"], mat["delta"], mat["c1"])
    _check(mat["c2"] > 0, "material.c2", "must be > 0")
    _check(d["lambda"] > 0, "lambda", "must be > 0")
    if d["experiment"] == "fluid2d":
        d0 = MaterialModel(**mat).d0
        regime = _FLUID_REGIME["expansion" if d["lambda"] ** 2 > d0 else "compression"]
        for sec, keys in regime.items():
            for key, value in keys.items():
                if d[sec][key] is None:
                    d[sec][key] = value
    pen = d["penalty"]
    _check(pen["eps2"] > 0, "penalty.eps2", "must be > 0")
    _check(pen["tau"] > 0, "penalty.tau", "must be > 0")
    _check(pen["alpha"] > 1, "penalty.alpha", "must be > 1")
    _check(pen["M"] > 0, "penalty.M", "must be > 0")
    _check(d["grid"]["m"] >= 2, "grid.m", "must be >= 2")
    _check(d["mesh"]["n_rings"] >= 2, "mesh.n_rings", "must be >= 2")
    _check(0 <= d["mesh"]["jitter"] < 0.5, "mesh.jitter", "must lie in [0, 0.5)")
    opt = d["optimizer"]
    for key in ("max_iter", "memory", "nonmonotone_window"):
        _check(opt[key] >= 1, f"optimizer.{key}", "must be >= 1")
    _check(opt["grad_tol"] > 0, "optimizer.grad_tol", "must be > 0")
    _check(opt["step_tol"] > 0, "optimizer.step_tol", "must be > 0")
    _check(d["decoupled"]["core_cells"] >= 0, "decoupled.core_cells", "must be >= 0")
    _check(d["decoupled"]["core_cells"] < d["grid"]["m"], "decoupled.core_cells", "must be < grid.m")
    for i, e in enumerate(d["table1"]["eps2_list"]):
        _check(e > 0, f"table1.eps2_list[{i}]", "must be > 0")
    ns = d["repulsion"]["ns"]
    for i, n in enumerate(ns):
        _check(float(n).is_integer() and n >= 2, f"repulsion.ns[{i}]", "must be an integer >= 2")
    d["repulsion"]["ns"] = [int(n) for n in ns]
    mfine = 16 * max(d["repulsion"]["ns"])
    for i, n in enumerate(d["repulsion"]["ns"]):
        _check(mfine % n == 0, f"repulsion.ns[{i}]", f"must divide 16*max(ns) = {mfine}")
    gp = d["gamma_pair"]
    for i, x in enumerate(gp["deltas"]):
        _check(0 < x < 0.5, f"gamma_pair.deltas[{i}]", "must lie in (0, 0.5)")
        k = x * d["grid"]["m"]
        if d["experiment"] == "gamma-pair":
            _check(abs(k - round(k)) < 1e-9, f"gamma_pair.deltas[{i}]",
                   "must be a node of the grid")
    _check(gp["quadrature"] in ("grid", "exact"), "gamma_pair.quadrature", "must be grid or exact")
    fl = d["flow"]
    _check(fl["max_iter"] >= 1, "flow.max_iter", "must be >= 1")
    for key in ("update_tol", "dt_u", "dt_v"):
        _check(fl[key] > 0, f"flow.{key}", "must be > 0")
    _check(fl["solver"] in ("direct", "cg"), "flow.solver", "must be direct or cg")
    _check(fl["init"] in ("zero", "gaussian"), "flow.init", "must be zero or gaussian")
    _check(fl["stop_on"] in ("velocity", "update"), "flow.stop_on", "must be velocity or update")
    _check(d["seed"] >= 0, "seed", "must be >= 0")


def parse_config(source=None, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from a JSON file (path) or dict, then apply overrides.

    ``overrides`` uses dotted keys, e.g. ``{"penalty.eps2": 1e-8}``; they win
    over file values. Unknown keys anywhere are errors.
    """
    if source is None:
        raw = {}
    elif isinstance(source, dict):
        raw = copy.deepcopy(source)
    else:
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from exc
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config: invalid JSON ({exc.msg} at line {exc.lineno})") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config: top level must be an object")
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if "." in key:
            sec, sub = key.split(".", 1)
            node = raw.setdefault(sec, {})
            if not isinstance(node, dict):
                raise ConfigError(f"{sec}: expected an object")
            node[sub] = value
        else:
            raw[key] = value
    d = _merge(raw)
    _validate(d)
    return RunConfig(experiment=d["experiment"], lam=d["lambda"], out=d["out"], seed=d["seed"],
                     **{sec: d[sec] for sec in _SCHEMA})
