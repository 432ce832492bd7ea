"""Run configuration: a single JSON document, schema-checked before any compute."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .errors import ConfigError, ParameterError
from .model import LatticeParams

_range = {
    "type": "object",
    "properties": {"start": {"type": "number"}, "stop": {"type": "number"},
                   "count": {"type": "integer", "minimum": 1}},
    "required": ["start", "stop", "count"],
    "additionalProperties": False,
}
_num_list = {"type": "array", "items": {"type": "number"}}
_num_grid = {"oneOf": [_num_list, _range]}

SCHEMA = {
    "type": "object",
    "properties": {
        "params": {
            "type": "object",
            "properties": {
                "N": {"type": "integer", "minimum": 1},
                "U": {"type": "number"},
                "h": {"type": "number", "minimum": 0},
                "b": {"type": "number"},
                "kappa": {"type": "number", "minimum": 0},
                "gamma": {"type": "number", "minimum": 0},
                "sigma": {"type": "number", "exclusiveMinimum": 0},
                "J": {"type": "number"},
            },
            "required": ["N"],
            "additionalProperties": False,
        },
        "grids": {
            "type": "object",
            "properties": {
                "h_over_J": _num_grid,
                "alpha": {"oneOf": [
                    {"type": "array", "items": {"type": "integer", "minimum": 1}},
                    {"enum": ["all", "lowest", "middle", "highest"]},
                ]},
                "gamma": _num_grid,
                "N": {"type": "array", "items": {"type": "integer", "minimum": 1}},
            },
            "additionalProperties": False,
        },
        "mode": {
            "type": "object",
            "properties": {
                "pulse": {"enum": ["lorentzian", "delta"]},
                "spectrum": {"enum": ["closed", "effective"]},
                "suites": {"type": "array", "items": {
                    "enum": ["null", "unitarity", "time_domain", "dual_path"]}},
            },
            "additionalProperties": False,
        },
        "integration": {
            "type": "object",
            "properties": {
                "rel_tol": {"type": "number", "exclusiveMinimum": 0},
                "max_subdivisions": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "workers": {"type": "integer", "minimum": 1},
        "output": {
            "type": "object",
            "properties": {"path": {"type": "string"}, "format": {"enum": ["csv", "json"]}},
            "additionalProperties": False,
        },
    },
    "required": ["params"],
    "additionalProperties": False,
}


def expand_grid(spec) -> list[float]:
    """A list passes through; {start, stop, count} becomes an inclusive linspace."""
    if spec is None:
        return []
    if isinstance(spec, dict):
        return [float(x) for x in np.linspace(spec["start"], spec["stop"], spec["count"])]
    return [float(x) for x in spec]


@dataclass(frozen=True)
class RunConfig:
    params: LatticeParams
    h_over_J: tuple = ()
    alpha: object = "all"
    gamma: tuple = ()
    N_list: tuple = ()
    pulse: str = "lorentzian"
    spectrum: str = "closed"
    suites: tuple = ("null", "unitarity", "time_domain", "dual_path")
    rel_tol: float = 1e-6
    max_subdivisions: int = 200
    workers: int | None = None
    out_path: str | None = None
    out_format: str = "csv"
    raw: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        try:
            jsonschema.validate(doc, SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"{where}: {exc.message}") from exc
        try:
            params = LatticeParams(**doc["params"])
        except (ParameterError, TypeError) as exc:
            raise ConfigError(f"params: {exc}") from exc
        grids = doc.get("grids", {})
        mode = doc.get("mode", {})
        integ = doc.get("integration", {})
        out = doc.get("output", {})
        alpha = grids.get("alpha", "all")
        return cls(
            params=params,
            h_over_J=tuple(expand_grid(grids.get("h_over_J"))),
            alpha=tuple(alpha) if isinstance(alpha, list) else alpha,
            gamma=tuple(expand_grid(grids.get("gamma"))),
            N_list=tuple(grids.get("N", ())),
            pulse=mode.get("pulse", "lorentzian"),
            spectrum=mode.get("spectrum", "closed"),
            suites=tuple(mode.get("suites", cls.suites)),
            rel_tol=float(integ.get("rel_tol", 1e-6)),
            max_subdivisions=int(integ.get("max_subdivisions", 200)),
            workers=doc.get("workers"),
            out_path=out.get("path"),
            out_format=out.get("format", "csv"),
            raw=doc,
        )

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        return cls.from_dict(doc)

    def resolved(self) -> dict:
        """Fully expanded config, enough to replay the run exactly."""
        return {
            "params": self.params.as_dict(),
            "grids": {"h_over_J": list(self.h_over_J),
                      "alpha": list(self.alpha) if isinstance(self.alpha, tuple) else self.alpha,
                      "gamma": list(self.gamma), "N": list(self.N_list)},
            "mode": {"pulse": self.pulse, "spectrum": self.spectrum, "suites": list(self.suites)},
            "integration": {"rel_tol": self.rel_tol, "max_subdivisions": self.max_subdivisions},
        }
