"""Run configuration: a single JSON document validated before any computation.

Example::

    {
      "system": {"kind": "julia", "a": [-0.7, 0.2]},
      "basis": {"kind": "monomial", "degree": 10},
      "alpha": 0.6,
      "K": 30000,
      "seeds": {"data": 1, "artificial": 2, "centers": 3, "mc": 4},
      "metrics": {"M": 100000, "T": 1000},
      "output": {"dataset": "data.csv", "model": "model.json"}
    }

``state_set``/``control_set`` default to the system's benchmark sets. An RBF
basis is given either by ``"N"`` (centers drawn with the ``centers`` seed) or
by explicit ``"centers"``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import jsonschema

from .basis import Basis, MonomialBasis, ThinPlateBasis, generate_rbf_centers
from .dynamics import SYSTEM_KINDS, SystemSpec
from .errors import ConfigurationError
from .geometry import ConstraintSet, set_from_dict
from .invariant import FitConfig

_SET_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {"kind": {"enum": ["box", "ball", "transformed_box"]}},
}

SCHEMA = {
    "type": "object",
    "required": ["system", "basis", "alpha", "K", "seeds"],
    "additionalProperties": False,
    "properties": {
        "system": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": list(SYSTEM_KINDS)},
                "a": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
                "n": {"type": "integer", "minimum": 2},
                "unitary_seed": {"type": "integer"},
                "variant": {"enum": ["affine", "nonlinear"]},
                "h": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "state_set": _SET_SCHEMA,
        "control_set": _SET_SCHEMA,
        "basis": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["monomial", "rbf_thin_plate"]},
                "degree": {"type": "integer", "minimum": 0},
                "N": {"type": "integer", "minimum": 1},
                "centers": {"type": "array"},
            },
            "additionalProperties": False,
        },
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "K": {"type": "integer", "minimum": 1},
        "K_prime": {"type": ["integer", "null"], "minimum": 1},
        "split_fraction": {"type": ["number", "null"], "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "seeds": {
            "type": "object",
            "required": ["data", "artificial", "centers", "mc"],
            "properties": {k: {"type": "integer", "minimum": 0} for k in ("data", "artificial", "centers", "mc")},
            "additionalProperties": False,
        },
        "solver": {
            "type": "object",
            "properties": {
                "name": {"type": "string"},
                "feasibility_tol": {"type": "number", "exclusiveMinimum": 0},
                "gap_tol": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "quadrature": {
            "type": "object",
            "properties": {
                "method": {"enum": ["auto", "analytic", "monte_carlo"]},
                "samples": {"type": "integer", "minimum": 2},
            },
            "additionalProperties": False,
        },
        "metrics": {
            "type": "object",
            "properties": {
                "M": {"type": "integer", "minimum": 1000},
                "T": {"type": "integer", "minimum": 1},
                "grid_resolution": {"type": "integer", "minimum": 2},
            },
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {k: {"type": "string"} for k in ("dataset", "model", "report", "grid")},
            "additionalProperties": False,
        },
    },
}


@dataclass
class RunConfig:
    raw: dict
    system: SystemSpec
    state_set: ConstraintSet
    control_set: Optional[ConstraintSet]
    base_dir: Path

    @property
    def seeds(self) -> dict:
        return self.raw["seeds"]

    @property
    def metrics(self) -> dict:
        return {"M": 100_000, "T": 1000, "grid_resolution": 101, **self.raw.get("metrics", {})}

    def output_path(self, key: str, default: str) -> Path:
        p = Path(self.raw.get("output", {}).get(key, default))
        return p if p.is_absolute() else self.base_dir / p

    def build_basis(self) -> Basis:
        spec = self.raw["basis"]
        n = self.state_set.dim
        if spec["kind"] == "monomial":
            if "degree" not in spec:
                raise ConfigurationError("monomial basis needs 'degree'")
            return MonomialBasis(n, spec["degree"])
        if "centers" in spec:
            return ThinPlateBasis(spec["centers"])
        if "N" not in spec:
            raise ConfigurationError("RBF basis needs 'N' or 'centers'")
        return ThinPlateBasis(generate_rbf_centers(self.state_set, spec["N"], self.seeds["centers"]))

    def fit_config(self) -> FitConfig:
        solver = self.raw.get("solver", {})
        quad = self.raw.get("quadrature", {})
        opts = {"max_iter": solver["max_iter"]} if "max_iter" in solver else {}
        return FitConfig(
            basis=self.build_basis(),
            alpha=float(self.raw["alpha"]),
            n_artificial=self.raw.get("K_prime"),
            artificial_seed=self.seeds["artificial"],
            split_fraction=self.raw.get("split_fraction"),
            feasibility_tol=solver.get("feasibility_tol", 1e-8),
            gap_tol=solver.get("gap_tol", 1e-8),
            quadrature=quad.get("method", "auto"),
            mc_samples=quad.get("samples", 1_000_000),
            mc_seed=self.seeds["mc"],
            solver=solver.get("name", "builtin"),
            solver_options=opts,
        )


def parse_config(raw: dict, base_dir=".") -> RunConfig:
    """Validate ``raw`` against the schema and the cross-field rules."""
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigurationError(f"config error at {where}: {exc.message}") from None
    try:
        system = SystemSpec.from_dict(raw["system"])
        state_set = set_from_dict(raw["state_set"]) if "state_set" in raw else system.default_state_set()
        if "control_set" in raw:
            control_set = set_from_dict(raw["control_set"])
        else:
            control_set = system.default_control_set()
    except (ValueError, TypeError) as exc:
        raise ConfigurationError(f"config error: {exc}") from None
    if state_set.dim != system.state_dim:
        raise ConfigurationError(f"state_set has dimension {state_set.dim}, system needs {system.state_dim}")
    if system.control_dim == 0 and control_set is not None:
        raise ConfigurationError("control_set given for an uncontrolled system")
    if control_set is not None and control_set.dim != system.control_dim:
        raise ConfigurationError("control_set dimension does not match the system")
    return RunConfig(raw, system, state_set, control_set, Path(base_dir))


def load_config(path, overrides: Optional[dict] = None) -> RunConfig:
    path = Path(path)
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    for key, value in (overrides or {}).items():
        if value is not None:
            raw[key] = value
    return parse_config(raw, path.parent)
