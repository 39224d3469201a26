"""Experiment configuration files.

A config is a YAML document::

    name: hilmy
    output: {plots: true}
    experiments:
      - name: hilmy
        flow: {builtin: hilmy, params: {dt_internal: 0.01}}
        grid: {h: 0.05}
        sets:
          - unit_circle                      # builtin candidate set
          - {name: poles, points: [[1, 0], [-1, 0]]}
        sampler: {kind: uniform, n: 500, seed: 0}
        checks:
          - {property: center, sets: [poles], eps: 0.2, T: 1000}
        estimators:
          - {kind: minimal_attractor, eps: 0.02, dt: 0.01, burn_in: 1000,
             horizon: 2000, reference: unit_circle}
    oracle: {systems: 1000, max_n: 12, seed: 0}

Errors are reported as :class:`ConfigError` carrying the path of the
offending field, e.g. ``experiments[0].checks[1].eps``.
"""
from __future__ import annotations

import inspect
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import yaml

from .flow import BUILTINS, candidate_names

STABILITY_CHECKS = ("nilpotent", "strong", "weak", "almost_weak", "ae_pointwise")
ATTRACTOR_CHECKS = ("absorbing", "pointwise_absorbing", "interior_cover", "attractive",
                    "lyapunov", "uniform", "milnor", "center")
ESTIMATORS = ("minimal_attractor", "minimal_center", "minimal_milnor",
              "minimal_uniform_attractor", "omega_limit")
SAMPLERS = ("gaussian", "uniform", "dirac")

_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_int_pos = {"type": "integer", "minimum": 1}
_points = {"type": "array", "minItems": 1,
           "items": {"type": "array", "minItems": 1, "items": {"type": "number"}}}

_CHECK = {
    "type": "object",
    "required": ["property"],
    "additionalProperties": False,
    "properties": {
        "property": {"enum": list(STABILITY_CHECKS + ATTRACTOR_CHECKS)},
        "sets": {"type": "array", "items": {"type": "string"}},
        "eps": _nonneg, "T": _pos, "dt": _pos, "settle": {"type": "number",
                                                         "exclusiveMinimum": 0,
                                                         "maximum": 1},
        "tol_density": {"type": "number", "minimum": 0, "maximum": 1},
        "n_samples": _int_pos, "delta": {"type": "number", "minimum": 0, "maximum": 1},
        "seed": {"type": "integer", "minimum": 0}, "budget": _int_pos, "h0": _pos,
        "eps_list": {"type": "array", "minItems": 1, "items": _pos}, "n_max": _int_pos,
        "omega_check": {"type": "boolean"}, "probe_h": _pos, "T_lyapunov": _pos,
        "dt_lyapunov": _pos,
    },
}

_ESTIMATOR = {
    "type": "object",
    "required": ["kind", "eps"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": list(ESTIMATORS)},
        "eps": _pos, "dt": _pos, "burn_in": _nonneg, "horizon": _pos, "radius": _pos,
        "mass_floor": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "dt_img": _pos, "T_max": _pos, "n_samples": _int_pos,
        "seed": {"type": "integer", "minimum": 0},
        "x": {"type": "array", "items": {"type": "number"}},
        "reference": {"oneOf": [{"type": "string"}, _points]},
    },
}

_EXPERIMENT = {
    "type": "object",
    "required": ["name", "flow"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "pattern": "^[A-Za-z0-9_.-]+$"},
        "flow": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "builtin": {"type": "string"},
                "finite": {"type": "array", "minItems": 1,
                           "items": {"type": "integer", "minimum": 0}},
                "params": {"type": "object"},
            },
            "oneOf": [{"required": ["builtin"]}, {"required": ["finite"]}],
        },
        "grid": {"type": "object", "additionalProperties": False,
                 "properties": {"h": _pos, "budget": _int_pos}},
        "sets": {"type": "array", "items": {"oneOf": [
            {"type": "string"},
            {"type": "object", "required": ["name", "points"], "additionalProperties": False,
             "properties": {"name": {"type": "string"}, "points": _points}},
            {"type": "object", "required": ["name", "builtin"], "additionalProperties": False,
             "properties": {"name": {"type": "string"}, "builtin": {"type": "string"},
                            "resolution": _pos}},
        ]}},
        "sampler": {"type": "object", "required": ["kind"], "additionalProperties": False,
                    "properties": {"kind": {"enum": list(SAMPLERS)}, "sigma": _pos,
                                   "mean": {"type": "number"},
                                   "point": {"type": "array", "items": {"type": "number"}},
                                   "n": _int_pos, "seed": {"type": "integer", "minimum": 0}}},
        "checks": {"type": "array", "items": _CHECK},
        "estimators": {"type": "array", "items": _ESTIMATOR},
    },
}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "description": {"type": "string"},
        "output": {"type": "object", "additionalProperties": False,
                   "properties": {"plots": {"type": "boolean"}, "curves": {"type": "boolean"},
                                  "threads": _int_pos}},
        "experiments": {"type": "array", "items": _EXPERIMENT},
        "oracle": {"type": "object", "additionalProperties": False,
                   "properties": {"systems": _int_pos,
                                  "max_n": {"type": "integer", "minimum": 2, "maximum": 16},
                                  "seed": {"type": "integer", "minimum": 0},
                                  "cap": _int_pos}},
    },
}

_SAMPLED = {"ae_pointwise", "milnor"}


class ConfigError(ValueError):
    """Invalid configuration; ``path`` locates the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path or "<root>"
        super().__init__(f"{self.path}: {message}")


def _path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated configuration document and where it came from."""

    data: dict
    source: str = "<memory>"

    @property
    def name(self) -> str:
        return self.data.get("name", Path(self.source).stem)

    @property
    def experiments(self) -> list:
        return self.data.get("experiments", [])

    @property
    def oracle(self) -> dict | None:
        return self.data.get("oracle")

    @property
    def output(self) -> dict:
        return self.data.get("output", {})


def _set_names(flow_spec: dict) -> list[str]:
    if "builtin" not in flow_spec:
        return ["whole"]
    from .flow import builtin
    try:
        _, f = builtin(flow_spec["builtin"], **flow_spec.get("params", {}))
    except TypeError:
        return []
    return candidate_names(f)


def _semantic(data: dict):
    seen = set()
    for j, exp in enumerate(data.get("experiments", [])):
        if exp["name"] in seen:
            raise ConfigError(_path(["experiments", j, "name"]), "duplicate experiment name")
        seen.add(exp["name"])
    for i, exp in enumerate(data.get("experiments", [])):
        base = ["experiments", i]
        fs = exp["flow"]
        if "builtin" in fs:
            name = fs["builtin"]
            if name not in BUILTINS:
                raise ConfigError(_path(base + ["flow", "builtin"]),
                                  f"unknown builtin {name!r}; known: {sorted(BUILTINS)}")
            allowed = {p for p, v in inspect.signature(BUILTINS[name]).parameters.items()
                       if v.kind is not v.VAR_KEYWORD}
            for p, v in fs.get("params", {}).items():
                if p not in allowed:
                    raise ConfigError(_path(base + ["flow", "params", p]),
                                      f"{name!r} takes no parameter {p!r}")
                if not isinstance(v, (int, float)) or v <= 0:
                    raise ConfigError(_path(base + ["flow", "params", p]),
                                      "must be a positive number")
        else:
            n = len(fs["finite"])
            for j, v in enumerate(fs["finite"]):
                if v >= n:
                    raise ConfigError(_path(base + ["flow", "finite", j]),
                                      f"state {v} out of range for {n} states")
        known = set(_set_names(fs))
        names = []
        for j, s in enumerate(exp.get("sets", [])):
            if isinstance(s, str):
                if s not in known:
                    raise ConfigError(_path(base + ["sets", j]),
                                      f"unknown candidate set {s!r}; known: {sorted(known)}")
                names.append(s)
            else:
                if "builtin" in s and s["builtin"] not in known:
                    raise ConfigError(_path(base + ["sets", j, "builtin"]),
                                      f"unknown candidate set {s['builtin']!r}")
                names.append(s["name"])
        if len(set(names)) != len(names):
            raise ConfigError(_path(base + ["sets"]), "set names must be unique")
        for j, c in enumerate(exp.get("checks", [])):
            for k, s in enumerate(c.get("sets", [])):
                if s not in names:
                    raise ConfigError(_path(base + ["checks", j, "sets", k]),
                                      f"set {s!r} is not declared in this experiment")
            if c["property"] in _SAMPLED and "sampler" not in exp:
                raise ConfigError(_path(base + ["checks", j, "property"]),
                                  f"{c['property']!r} needs an experiment sampler")
        for j, e in enumerate(exp.get("estimators", [])):
            ref = e.get("reference")
            if isinstance(ref, str) and ref not in names:
                raise ConfigError(_path(base + ["estimators", j, "reference"]),
                                  f"set {ref!r} is not declared in this experiment")
            if e["kind"] == "minimal_milnor" and "sampler" not in exp:
                raise ConfigError(_path(base + ["estimators", j, "kind"]),
                                  "minimal_milnor needs an experiment sampler")
            if e["kind"] == "omega_limit" and "x" not in e:
                raise ConfigError(_path(base + ["estimators", j]), "omega_limit needs 'x'")
            if "burn_in" in e and "horizon" in e and e["burn_in"] >= e["horizon"]:
                raise ConfigError(_path(base + ["estimators", j, "burn_in"]),
                                  "burn_in must be smaller than horizon")
        samp = exp.get("sampler")
        if samp is not None and "seed" not in samp:
            raise ConfigError(_path(base + ["sampler"]), "a sampler needs a 'seed'")
        if samp is not None and samp["kind"] == "dirac" and "point" not in samp:
            raise ConfigError(_path(base + ["sampler"]), "a dirac sampler needs a 'point'")


def validate(data) -> ExperimentConfig:
    """Validate a parsed document; raises :class:`ConfigError`."""
    if not isinstance(data, dict):
        raise ConfigError("", "config must be a mapping")
    validator = jsonschema.Draft7Validator(SCHEMA)
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        # oneOf failures are easier to read through their closest sub-error
        while err.context:
            err = min(err.context, key=lambda e: len(list(e.schema_path)))
        raise ConfigError(_path(err.absolute_path), err.message)
    if not data.get("experiments") and "oracle" not in data:
        raise ConfigError("experiments", "config defines neither experiments nor oracle")
    _semantic(data)
    return ExperimentConfig(data)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("", f"cannot read {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("", f"not valid YAML: {exc}") from None
    cfg = validate(data)
    return ExperimentConfig(cfg.data, str(path))


def bundled_configs() -> dict[str, Path]:
    here = Path(__file__).parent / "configs"
    return {p.stem: p for p in sorted(here.glob("*.cfg"))}
