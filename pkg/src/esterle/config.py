"""Experiment configuration: JSON file, schema check, flag overrides."""

from __future__ import annotations

import copy
import json
from pathlib import Path

import jsonschema

SCHEMA_VERSION = 1

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "set": {"variant": "atoms", "angles": [0.0]},
    "measure": None,
    "t_start": 0.5,
    "rule_params": {"growth": 0.25, "min_increment": 1e-3, "max_halvings": 60},
    "omega_t_min": 1e-8,
    "n_max": 50,
    "root_rel_tol": 1e-10,
    "slack": 1.1,
    "grid": {"t_floor": 1e-9, "n_radii": 181, "n_coarse": 512, "top_rays": 4, "rounds": 2},
    "curve": {"t_min": 1e-8, "t_max": 0.5, "points": 41},
    "removability": None,
    "output_dir": "out",
    "figures": False,
    "threads": 1,
    "random_free": True,
}

_SET = {"type": "object", "required": ["variant"], "properties": {
    "variant": {"enum": ["atoms", "cluster", "cantor", "union"]},
    "tolerance": {"type": "number", "exclusiveMinimum": 0},
}}

SCHEMA = {
    "type": "object",
    "required": ["schema_version", "set"],
    "properties": {
        "schema_version": {"const": SCHEMA_VERSION},
        "set": _SET,
        "measure": {"type": ["object", "null"], "required": ["variant"]},
        "t_start": {"type": "number", "exclusiveMinimum": 0},
        "rule_params": {"type": "object", "properties": {
            "growth": {"type": "number", "exclusiveMinimum": 0},
            "min_increment": {"type": "number", "exclusiveMinimum": 0},
            "max_halvings": {"type": "integer", "minimum": 1},
        }, "additionalProperties": False},
        "omega_t_min": {"type": "number", "exclusiveMinimum": 0},
        "n_max": {"type": "integer"},
        "root_rel_tol": {"type": "number", "exclusiveMinimum": 0},
        "slack": {"type": "number", "exclusiveMinimum": 0},
        "grid": {"type": "object"},
        "curve": {"type": "object"},
        "removability": {"type": ["object", "null"], "properties": {
            "function": {"type": "object", "required": ["tag"]},
            "etas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
            "M": {"type": "integer", "minimum": 8},
        }},
        "output_dir": {"type": "string"},
        "figures": {"type": "boolean"},
        "threads": {"type": "integer", "minimum": 1},
        "random_free": {"const": True},
    },
    "additionalProperties": False,
}


class ConfigError(ValueError):
    pass


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> dict:
    """Defaults, then the file, then flag overrides; validated."""
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        cfg = _merge(cfg, data)
    if overrides:
        cfg = _merge(cfg, {k: v for k, v in overrides.items() if v is not None})
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    try:
        jsonschema.validate(cfg, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from exc
    if cfg["n_max"] < 1:
        raise ConfigError("n_max must be ≥ 1")
