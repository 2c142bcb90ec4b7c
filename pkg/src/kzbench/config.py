"""Experiment configuration: JSON schema, validation and defaults."""

from __future__ import annotations

import hashlib
import json
from copy import deepcopy
from pathlib import Path

import jsonschema

from .errors import ConfigError

EXPERIMENTS = ("kz_bench", "noise_sweep", "trotter_convergence", "anneal_opt", "spectrum_scan")

_POS = {"type": "number", "exclusiveMinimum": 0}
_INT1 = {"type": "integer", "minimum": 1}
_GRID = {"type": "array", "items": _POS, "minItems": 1}
_STEPS = {
    "oneOf": [
        {"type": "array", "items": _INT1, "minItems": 1},
        {
            "type": "object",
            "properties": {"start": _INT1, "stop": _INT1, "step": _INT1},
            "required": ["start", "stop"],
            "additionalProperties": False,
        },
    ]
}
_WINDOW = {"type": "array", "items": _POS, "minItems": 2, "maxItems": 2}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment", "seed", "lattice"],
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "lattice": {
            "type": "object",
            "additionalProperties": False,
            "required": ["geometry"],
            "properties": {
                "geometry": {"enum": ["open_chain", "periodic_chain", "heavy_hex", "square"]},
                "n": {"type": "integer", "minimum": 2},
                "rows": _INT1,
                "cols": _INT1,
                "device": {"enum": ["eagle_127", "heron_133"]},
            },
        },
        "couplings": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["uniform", "disordered"]},
                "J": {"type": "number"},
                "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
            },
        },
        "dt": _POS,
        "dt_grid": _GRID,
        "n_steps": _STEPS,
        "t_f": _GRID,
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "model": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        k: {"type": "number", "minimum": 0}
                        for k in ("t1", "t2", "e_1q", "e_2q", "e_ro", "dur_1q", "dur_2q", "dur_ro")
                    },
                },
                "eta": _GRID,
                "native_2q": _INT1,
                "mitigate_readout": {"type": "boolean"},
                "divergence_delta": _POS,
            },
        },
        "trajectories": _INT1,
        "shots": {"type": "integer", "minimum": 0},
        "analysis": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kz_window": _WINDOW,
                "delta": _POS,
                "calib_points": _INT1,
                "reference_exponent": {"type": "number"},
            },
        },
        "reference": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"fine_dt": {"type": "number", "exclusiveMinimum": 0, "maximum": 0.01}},
        },
        "spectrum": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"s_points": {"type": "integer", "minimum": 2}, "levels": _INT1},
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"directory": {"type": "string"}},
        },
    },
}

DEFAULTS = {
    "couplings": {"kind": "uniform", "J": 1.0},
    "dt": 0.5,
    "trajectories": 1000,
    "shots": 0,
    "analysis": {"kz_window": [2.0, 10.0], "delta": 0.2, "calib_points": 3, "reference_exponent": -0.5},
    "reference": {"fine_dt": 0.01},
    "spectrum": {"s_points": 101, "levels": 4},
    "output": {"directory": "out"},
}

_NOISE_DEFAULTS = {"model": {}, "eta": [1.0], "native_2q": 2, "mitigate_readout": False, "divergence_delta": 0.1}


def validate(doc: dict) -> None:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None


def resolve(doc: dict) -> dict:
    """Validate and fill defaults; the result is what every artifact records."""
    validate(doc)
    out = deepcopy(doc)
    for key, value in DEFAULTS.items():
        if isinstance(value, dict):
            out[key] = {**value, **out.get(key, {})}
        else:
            out.setdefault(key, value)
    if "noise" in out:
        out["noise"] = {**_NOISE_DEFAULTS, **out["noise"]}
    steps = out.get("n_steps")
    if isinstance(steps, dict):
        out["n_steps"] = list(range(steps["start"], steps["stop"] + 1, steps.get("step", 1)))
    _check_semantics(out)
    return out


def _check_semantics(cfg: dict) -> None:
    exp = cfg["experiment"]
    lat = cfg["lattice"]
    geo = lat["geometry"]
    if geo in ("open_chain", "periodic_chain") and "n" not in lat:
        raise ConfigError("lattice: chains need 'n'")
    if geo == "square" and not {"rows", "cols"} <= set(lat):
        raise ConfigError("lattice: square needs 'rows' and 'cols'")
    if geo == "heavy_hex" and "device" not in lat and not {"rows", "cols"} <= set(lat):
        raise ConfigError("lattice: heavy_hex needs 'rows' and 'cols' or 'device'")
    cp = cfg["couplings"]
    if cp["kind"] == "disordered" and "seeds" not in cp:
        raise ConfigError("couplings: disordered couplings need 'seeds'")
    if exp in ("kz_bench", "noise_sweep", "anneal_opt") and "n_steps" not in cfg:
        raise ConfigError(f"{exp} needs 'n_steps'")
    if exp in ("trotter_convergence", "anneal_opt") and "dt_grid" not in cfg:
        raise ConfigError(f"{exp} needs 'dt_grid'")
    if exp == "trotter_convergence" and "t_f" not in cfg:
        raise ConfigError("trotter_convergence needs 't_f'")
    if exp == "noise_sweep" and "noise" not in cfg:
        raise ConfigError("noise_sweep needs a 'noise' block")


def load(path: str | Path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def canonical(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical(cfg).encode()).hexdigest()
