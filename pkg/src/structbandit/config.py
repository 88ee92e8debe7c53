"""JSON config files for the command-line tool.

Each command reads one JSON document validated against a schema. Unknown
keys are rejected by name, parse errors report line and column, and the
structural invariants (group partition, matrix shape) are checked by
building the corresponding objects.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema

from .bandit import DecisionSet, Environment, ScheduleParams, make_theta_star
from .estimation import SolverConfig
from .exceptions import ConfigurationError, InputError
from .experiments import ExperimentSpec
from .structure import StructureModel

__all__ = ["ConfigError", "load_config", "validate", "SCHEMAS", "EpisodeConfig", "build_episode",
           "structure_from_dict"]

_POS_INT = {"type": "integer", "minimum": 1}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_KIND = {"enum": ["l1", "l2", "group", "nuclear"]}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required),
            "additionalProperties": False}


_STRUCTURE = _obj({
    "kind": _KIND,
    "s": _POS_INT,
    "groups": {"type": "array", "items": {"type": "array", "items": {"type": "integer"}}},
    "shape": {"type": "array", "items": _POS_INT, "minItems": 2, "maxItems": 2},
    "psi": _POS,
}, ["kind"])

_NOISE = _obj({"bound": _NONNEG, "kind": {"enum": ["uniform", "rademacher", "zero"]}})

_DSET = _obj({
    "kind": {"enum": ["ball", "cube", "polytope"]},
    "vertices": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
}, ["kind"])

_CONSTANTS = _obj({k: _POS for k in (
    "c_prime", "epsilon", "gamma", "L", "K", "width_cap", "width_omega", "psi_max", "phi_omega",
)} | {"c_0": _NONNEG, "C_beta": _NONNEG})

_SOLVER = _obj({
    "max_iters": _POS_INT,
    "rel_tol": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    "step_rule": {"enum": ["fixed", "backtracking"]},
})

_GRID = {"type": "array", "items": _POS_INT, "minItems": 1}

SCHEMAS = {
    "run": _obj({
        "p": _POS_INT,
        "T": {"type": "integer", "minimum": 2},
        "structure": _STRUCTURE,
        "truth": _STRUCTURE,
        "noise": _NOISE,
        "decision_set": _DSET,
        "constants": _CONSTANTS,
        "solver": _SOLVER,
        "seed": {"type": "integer", "minimum": 0},
        "theta_seed": {"type": "integer", "minimum": 0},
        "kappa_directions": {"type": "integer", "minimum": 0},
    }, ["p", "T", "structure"]),
    "sweep": _obj({
        "name": {"type": "string"},
        "truth": _obj({"kind": _KIND, "s": _POS_INT, "group_size": _POS_INT, "rows": _POS_INT,
                       "psi": _POS}, ["kind"]),
        "structures": {"type": "array", "items": _KIND, "minItems": 1},
        "p_list": _GRID,
        "T_list": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
        "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1,
                  "uniqueItems": True},
        "noise_bound": _NONNEG,
        "noise_kind": {"enum": ["uniform", "rademacher", "zero"]},
        "decision_set": {"enum": ["ball", "cube"]},
        "constants": _CONSTANTS,
        "solver": _SOLVER,
        "kappa_directions": {"type": "integer", "minimum": 0},
    }, ["name", "truth", "p_list", "T_list", "seeds"]),
    "width": _obj({
        "set": {"enum": ["l1-ball", "l2-ball", "group-ball", "nuclear-ball"]},
        "p": _POS_INT,
        "samples": {"type": "integer", "minimum": 2},
        "seed": {"type": "integer", "minimum": 0},
        "group_size": _POS_INT,
        "rows": _POS_INT,
    }, ["set", "p"]),
    "diagnose-lambda": _obj({
        "p": _POS_INT,
        "structure": _STRUCTURE,
        "noise": _NOISE,
        "decision_set": _DSET,
        "t_grid": _GRID,
        "trials": {"type": "integer", "minimum": 30},
        "seed": {"type": "integer", "minimum": 0},
    }, ["p", "structure", "t_grid"]),
    "diagnose-re": _obj({
        "p": _POS_INT,
        "structure": _STRUCTURE,
        "decision_set": _DSET,
        "t_grid": _GRID,
        "seeds": {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 1},
        "directions": _POS_INT,
        "threshold": {"type": "number"},
        "theta_seed": {"type": "integer", "minimum": 0},
    }, ["p", "structure", "t_grid", "seeds"]),
}


class ConfigError(InputError):
    """Config file that does not parse or does not validate."""


def _format_error(err: jsonschema.ValidationError) -> str:
    where = "/".join(str(k) for k in err.absolute_path) or "<root>"
    if err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        return f"unknown key(s) {', '.join(repr(k) for k in extra)} at {where}"
    return f"{where}: {err.message}"


def validate(kind: str, data) -> dict:
    """Validate ``data`` against the schema of command ``kind``."""
    if kind not in SCHEMAS:
        raise ConfigError(f"no config schema for {kind!r}")
    validator = jsonschema.Draft202012Validator(SCHEMAS[kind])
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        raise ConfigError("; ".join(_format_error(e) for e in errors))
    _check_invariants(kind, data)
    return data


def structure_from_dict(p: int, d: dict) -> StructureModel:
    return StructureModel(d["kind"], p, s=d.get("s"), groups=d.get("groups"),
                          shape=tuple(d["shape"]) if "shape" in d else None, psi=d.get("psi"))


def _check_invariants(kind: str, data: dict) -> None:
    try:
        if kind in ("run", "diagnose-lambda", "diagnose-re"):
            structure_from_dict(data["p"], data["structure"])
            if "truth" in data:
                structure_from_dict(data["p"], data["truth"])
            if "decision_set" in data:
                DecisionSet(data["decision_set"]["kind"], data["p"], data["decision_set"].get("vertices"))
        elif kind == "sweep":
            ExperimentSpec.from_dict(data)
    except ConfigurationError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, kind: str) -> dict:
    """Read and validate a JSON config for command ``kind``."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return validate(kind, data)


@dataclass(frozen=True)
class EpisodeConfig:
    env: Environment
    dset: DecisionSet
    model: StructureModel
    params: ScheduleParams
    solver: SolverConfig
    seed: int
    kappa_directions: int


def build_episode(data: dict, seed: int | None = None) -> EpisodeConfig:
    """Objects for one episode from a validated ``run`` config.

    ``theta*`` is drawn with the ``truth`` structure (default: the
    algorithm's structure) from ``theta_seed`` (default: the episode seed).
    """
    p = data["p"]
    model = structure_from_dict(p, data["structure"])
    truth = structure_from_dict(p, data.get("truth", data["structure"]))
    seed = data.get("seed", 0) if seed is None else seed
    theta = make_theta_star(truth, data.get("theta_seed", seed))
    noise = data.get("noise", {})
    env = Environment(theta, noise.get("bound", 0.1), noise.get("kind", "uniform"))
    ds = data.get("decision_set", {"kind": "ball"})
    dset = DecisionSet(ds["kind"], p, ds.get("vertices"))
    params = ScheduleParams.for_model(model, data["T"], **data.get("constants", {}))
    return EpisodeConfig(env, dset, model, params, SolverConfig(**data.get("solver", {})), seed,
                         data.get("kappa_directions", 0))
