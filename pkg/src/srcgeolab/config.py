"""Strict JSON experiment configuration.

The schema is deliberately rigid: unknown keys are rejected with the full
field path, values are type- and range-checked, and the only optional
fields are resolutions (steps, basis size, epsilon grid, windows) and the
seed.  A machine-readable copy of the schema ships as
``data/config.schema.json``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .errors import ConfigError
from .zoo import ZOO_KINDS, ZooEntry

EXPERIMENT_KINDS = (
    "geodesic",
    "lift",
    "index",
    "verify-src",
    "conformal-check",
    "probe",
)

_COMMON_KEYS = {"name", "kind", "zoo", "seed", "steps"}
_KIND_KEYS = {
    "geodesic": _COMMON_KEYS | {"p", "q", "v0", "x0"},
    "lift": _COMMON_KEYS | {"p", "q", "v0", "t0"},
    "index": _COMMON_KEYS | {"p", "q", "v0", "basis_n"},
    "verify-src": _COMMON_KEYS | {"p", "q", "v0", "basis_n"},
    "conformal-check": _COMMON_KEYS | {"p", "q", "v0", "lambda"},
    "probe": _COMMON_KEYS | {"epsilons", "windows", "ell"},
}


@dataclass
class ExperimentSpec:
    """One validated experiment."""

    name: str
    kind: str
    zoo: str
    p: Optional[list] = None
    q: Optional[list] = None
    v0: Optional[list] = None
    x0: Optional[list] = None
    t0: float = 0.0
    steps: int = 1000
    basis_n: int = 64
    seed: int = 0
    lam: Optional[dict] = None
    epsilons: dict = dc_field(
        default_factory=lambda: {"min": 1e-4, "max": 1e-1, "count": 12}
    )
    windows: list = dc_field(default_factory=lambda: [0.15, 0.4, 0.65])
    ell: float = 0.2

    def epsilon_grid(self) -> np.ndarray:
        e = self.epsilons
        return np.logspace(
            np.log10(e["max"]), np.log10(e["min"]), int(e["count"])
        )


def _expect(cond, path, message):
    if not cond:
        raise ConfigError(path, message)


def _check_vector(value, path, dim=None):
    _expect(isinstance(value, list) and len(value) >= 1, path,
            "expected a list of numbers")
    for k, item in enumerate(value):
        _expect(isinstance(item, (int, float)) and not isinstance(item, bool),
                f"{path}[{k}]", "expected a number")
    if dim is not None:
        _expect(len(value) == dim, path, f"expected {dim} components")


def _check_number(value, path, positive=False, nonnegative=False):
    _expect(isinstance(value, (int, float)) and not isinstance(value, bool),
            path, "expected a number")
    if positive:
        _expect(value > 0, path, "must be positive")
    if nonnegative:
        _expect(value >= 0, path, "must be nonnegative")


def _check_int(value, path, minimum=None):
    _expect(isinstance(value, int) and not isinstance(value, bool), path,
            "expected an integer")
    if minimum is not None:
        _expect(value >= minimum, path, f"must be >= {minimum}")


def _parse_experiment(raw, idx) -> ExperimentSpec:
    path = f"experiments[{idx}]"
    _expect(isinstance(raw, dict), path, "expected an object")
    for key in ("name", "kind", "zoo"):
        _expect(key in raw, f"{path}.{key}", "required field missing")
    kind = raw["kind"]
    _expect(kind in EXPERIMENT_KINDS, f"{path}.kind",
            f"unknown kind {kind!r}; expected one of {EXPERIMENT_KINDS}")
    allowed = _KIND_KEYS[kind]
    for key in raw:
        _expect(key in allowed, f"{path}.{key}",
                f"unknown key for kind {kind!r}")
    _expect(isinstance(raw["name"], str) and raw["name"], f"{path}.name",
            "expected a nonempty string")
    _expect(isinstance(raw["zoo"], str) and raw["zoo"], f"{path}.zoo",
            "expected a zoo case name")

    spec = ExperimentSpec(name=raw["name"], kind=kind, zoo=raw["zoo"])
    for key in ("p", "q", "v0", "x0"):
        if key in raw:
            _check_vector(raw[key], f"{path}.{key}")
            setattr(spec, key, [float(c) for c in raw[key]])
    if "t0" in raw:
        _check_number(raw["t0"], f"{path}.t0")
        spec.t0 = float(raw["t0"])
    if "steps" in raw:
        _check_int(raw["steps"], f"{path}.steps", minimum=8)
        _expect(raw["steps"] % 2 == 0, f"{path}.steps",
                "must be even (composite Simpson grids)")
        spec.steps = raw["steps"]
    if "basis_n" in raw:
        _check_int(raw["basis_n"], f"{path}.basis_n", minimum=2)
        spec.basis_n = raw["basis_n"]
    if "seed" in raw:
        _check_int(raw["seed"], f"{path}.seed", minimum=0)
        spec.seed = raw["seed"]
    if "lambda" in raw:
        lam = raw["lambda"]
        _expect(isinstance(lam, dict), f"{path}.lambda", "expected an object")
        for key in lam:
            _expect(key in {"form", "coeff"}, f"{path}.lambda.{key}",
                    "unknown key")
        _expect(lam.get("form") in {"constant", "radial_quadratic"},
                f"{path}.lambda.form",
                "expected 'constant' or 'radial_quadratic'")
        _check_number(lam.get("coeff", 1.0), f"{path}.lambda.coeff",
                      positive=True)
        spec.lam = {"form": lam["form"], "coeff": float(lam.get("coeff", 1.0))}
    elif kind == "conformal-check":
        raise ConfigError(f"{path}.lambda", "required for conformal-check")
    if "epsilons" in raw:
        eps = raw["epsilons"]
        _expect(isinstance(eps, dict), f"{path}.epsilons", "expected an object")
        for key in eps:
            _expect(key in {"min", "max", "count"}, f"{path}.epsilons.{key}",
                    "unknown key")
        for key in ("min", "max", "count"):
            _expect(key in eps, f"{path}.epsilons.{key}", "required")
        _check_number(eps["min"], f"{path}.epsilons.min", positive=True)
        _check_number(eps["max"], f"{path}.epsilons.max", positive=True)
        _check_int(eps["count"], f"{path}.epsilons.count", minimum=6)
        _expect(eps["min"] < eps["max"], f"{path}.epsilons",
                "min must be below max")
        spec.epsilons = {"min": float(eps["min"]), "max": float(eps["max"]),
                         "count": int(eps["count"])}
    if "windows" in raw:
        _check_vector(raw["windows"], f"{path}.windows")
        spec.windows = [float(c) for c in raw["windows"]]
    if "ell" in raw:
        _check_number(raw["ell"], f"{path}.ell", positive=True)
        spec.ell = float(raw["ell"])
    for s0 in spec.windows:
        _expect(0.0 <= s0 and s0 + spec.ell <= 1.0, f"{path}.windows",
                f"window [{s0}, {s0} + ell] must sit inside [0, 1]")
    return spec


def _parse_zoo_entry(raw, idx) -> ZooEntry:
    path = f"zoo[{idx}]"
    _expect(isinstance(raw, dict), path, "expected an object")
    for key in raw:
        _expect(key in {"name", "kind", "params", "bounds"}, f"{path}.{key}",
                "unknown key")
    for key in ("name", "kind", "bounds"):
        _expect(key in raw, f"{path}.{key}", "required field missing")
    _expect(isinstance(raw["name"], str) and raw["name"], f"{path}.name",
            "expected a nonempty string")
    _expect(raw["kind"] in ZOO_KINDS, f"{path}.kind",
            f"unknown kind; expected one of {ZOO_KINDS}")
    bounds = raw["bounds"]
    _expect(isinstance(bounds, list) and len(bounds) >= 1, f"{path}.bounds",
            "expected a list of [lo, hi] pairs")
    for k, pair in enumerate(bounds):
        _expect(isinstance(pair, list) and len(pair) == 2,
                f"{path}.bounds[{k}]", "expected [lo, hi]")
        _check_number(pair[0], f"{path}.bounds[{k}][0]")
        _check_number(pair[1], f"{path}.bounds[{k}][1]")
        _expect(pair[0] < pair[1], f"{path}.bounds[{k}]",
                "interval must be nonempty")
    params = raw.get("params", {})
    _expect(isinstance(params, dict), f"{path}.params", "expected an object")
    if raw["kind"] == "euclidean_wind" and "wind" in params:
        _check_number(params["wind"], f"{path}.params.wind")
        _expect(abs(params["wind"]) < 1.0, f"{path}.params.wind",
                "the Randers condition requires |wind| < 1")
    if raw["kind"] == "sphere_stereographic" and "wind" in params:
        _check_number(params["wind"], f"{path}.params.wind")
        _expect(abs(params["wind"]) < 1.0, f"{path}.params.wind",
                "the Randers condition requires |wind| < 1")
    return ZooEntry(
        name=raw["name"], kind=raw["kind"], params=params,
        bounds=tuple(tuple(pair) for pair in bounds),
    )


def parse_config(doc: dict):
    """Validate a parsed JSON document; returns (experiments, zoo entries)."""
    _expect(isinstance(doc, dict), "$", "top level must be an object")
    for key in doc:
        _expect(key in {"experiments", "zoo"}, f"$.{key}", "unknown key")
    _expect("experiments" in doc, "$.experiments", "required field missing")
    _expect(isinstance(doc["experiments"], list) and doc["experiments"],
            "$.experiments", "expected a nonempty list")
    experiments = [
        _parse_experiment(raw, i) for i, raw in enumerate(doc["experiments"])
    ]
    names = [e.name for e in experiments]
    _expect(len(names) == len(set(names)), "$.experiments",
            "experiment names must be unique")
    zoo_entries = [
        _parse_zoo_entry(raw, i) for i, raw in enumerate(doc.get("zoo", []))
    ]
    return experiments, zoo_entries


def load_config(path):
    """Read and validate a config file; ConfigError carries field paths."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(str(path), "config file not found")
    except json.JSONDecodeError as exc:
        raise ConfigError(str(path), f"invalid JSON: {exc}")
    return parse_config(doc)
