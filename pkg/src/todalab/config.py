"""Run configuration: JSON schema, loading, and report serialization."""

import json
import time

import jsonschema
import numpy as np

from .field import DomainGrid
from .toda import CyclicData, ALPHA1_DEFAULT

__all__ = ["CONFIG_SCHEMA", "load_config", "data_from_config", "write_report"]

_poly = {
    "type": "array",
    "minItems": 1,
    "items": {
        "type": "array",
        "minItems": 2, "maxItems": 2,
        "items": {"type": "number"},
    },
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["n", "mode", "grid", "alpha"],
    "properties": {
        "n": {"type": "integer", "minimum": 2},
        "mode": {"enum": ["torus", "disk"]},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "required": ["N", "L"],
            "properties": {
                "N": {"type": "integer", "minimum": 8},
                "L": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "alpha": {
            "type": "object",
            "additionalProperties": False,
            "required": ["an_plus", "an_minus"],
            "properties": {
                "a1": {"type": "array", "minItems": 2, "maxItems": 2,
                       "items": {"type": "number"}},
                "a": {"type": "array", "items": _poly},
                "an_plus": _poly,
                "an_minus": _poly,
            },
        },
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "damping": {"type": "boolean"},
            },
        },
        "deg_Ln_negative": {"type": "boolean"},
    },
}


def load_config(path):
    with open(path) as fh:
        cfg = json.load(fh)
    jsonschema.validate(cfg, CONFIG_SCHEMA)
    n = cfg["n"]
    a_list = cfg["alpha"].get("a", [])
    if len(a_list) != max(0, n - 2):
        raise ValueError("alpha.a must list %d polynomials (alpha_2..alpha_%d)"
                         % (max(0, n - 2), n - 1))
    return cfg


def _poly_to_complex(poly):
    return np.array([c[0] + 1j * c[1] for c in poly], dtype=complex)


def data_from_config(cfg):
    grid = DomainGrid(cfg["mode"], cfg["grid"]["N"], cfg["grid"]["L"])
    alpha = cfg["alpha"]
    a1 = ALPHA1_DEFAULT
    if "a1" in alpha:
        a1 = alpha["a1"][0] + 1j * alpha["a1"][1]
    alphas = {j + 2: _poly_to_complex(p) for j, p in enumerate(alpha.get("a", []))}
    data = CyclicData(
        cfg["n"], grid, alphas,
        alpha_n_plus=_poly_to_complex(alpha["an_plus"]),
        alpha_n_minus=_poly_to_complex(alpha["an_minus"]),
        alpha1=a1,
        deg_Ln_negative=cfg.get("deg_Ln_negative", False),
    )
    solver = dict(tol=1e-11, max_iter=60, damping=True)
    solver.update(cfg.get("solver", {}))
    return data, solver


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def write_report(report, path, stamp=True):
    """Deterministic JSON report; the timestamp lives in its own field."""
    payload = _jsonable(report)
    if stamp:
        payload["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")
    return payload
