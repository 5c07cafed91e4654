"""JSON run configuration: schema, validation and exact echo.

Numbers may be given as JSON numbers or decimal strings.  They are read
as :class:`decimal.Decimal` so the echo in every report reproduces the
input digits exactly (as decimal strings).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Optional

import jsonschema

from .errors import ConfigError, DomainError
from .model import ModelParams, RawParams, nondimensionalize

ANALYSES = ("equilibria", "simulate", "bifurcation")
FORMATS = ("json", "csv")

_NUM = {
    "oneOf": [
        {"type": "number"},
        {"type": "string", "pattern": r"^[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?$"},
    ]
}
_PAIR = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_COUNT = {
    "oneOf": [
        {"type": "integer", "minimum": 3},
        {"type": "string", "pattern": r"^\+?0*([3-9]|[1-9]\d+)$"},
    ]
}

FEAR_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["constant", "shifted_sine", "tabulated"]},
        "value": _NUM,
        "offset": _NUM,
        "amplitude": _NUM,
        "frequency": _NUM,
        "values": {"type": "array", "items": _NUM},
        "file": {"type": "string"},
    },
    "required": ["kind"],
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "allelofear run configuration",
    "type": "object",
    "properties": {
        "analysis": {"enum": list(ANALYSES)},
        "params": {
            "type": "object",
            "properties": {name: _NUM for name in ("a", "b", "c", "k", "m")},
            "required": ["a", "b", "c", "m"],
            "additionalProperties": False,
        },
        "raw_params": {
            "type": "object",
            "properties": {
                name: _NUM
                for name in ("r1", "r2", "alpha1", "alpha2", "beta1", "beta2", "eta", "xi")
            },
            "required": ["r1", "r2", "alpha1", "alpha2", "beta1", "beta2", "eta", "xi"],
            "additionalProperties": False,
        },
        "nondimensionalize": {"type": "boolean"},
        "options": {
            "type": "object",
            "properties": {
                "mode": {"enum": ["ode", "pde"]},
                "init": _PAIR,
                "t_end": _NUM,
                "rel_tol": _NUM,
                "abs_tol": _NUM,
                "tol": _NUM,
                "n": _COUNT,
                "d1": _NUM,
                "d2": _NUM,
                "length": _NUM,
                "snapshots": {"type": "array", "items": _NUM},
                "fear_field": FEAR_SCHEMA,
                "parameter": {"enum": ["a", "b", "c", "k", "m"]},
                "lo": _NUM,
                "hi": _NUM,
            },
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {
                "dir": {"type": "string"},
                "formats": {"type": "array", "items": {"enum": list(FORMATS)}, "uniqueItems": True},
            },
            "additionalProperties": False,
        },
    },
    "required": ["analysis"],
    "oneOf": [
        {"required": ["params"], "not": {"required": ["raw_params"]}},
        {"required": ["raw_params", "nondimensionalize"], "not": {"required": ["params"]},
         "properties": {"nondimensionalize": {"const": True}}},
    ],
    "additionalProperties": False,
}


@dataclass
class RunConfig:
    analysis: str
    params: ModelParams
    options: dict = field(default_factory=dict)
    out_dir: Optional[str] = None
    formats: tuple = FORMATS
    source: dict = field(default_factory=dict, repr=False)

    def echo(self) -> dict:
        """The ingested document with every number rendered as its original decimal string."""
        return _stringify(self.source)


def _stringify(obj):
    if isinstance(obj, dict):
        return {k: _stringify(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_stringify(v) for v in obj]
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, (Decimal, int, float)):
        return str(obj)
    return obj


def _to_float(val, where: str) -> float:
    try:
        out = float(Decimal(str(val)))
    except (InvalidOperation, ValueError) as exc:
        raise ConfigError(f"{where}: not a number: {val!r}") from exc
    if not math.isfinite(out):
        raise ConfigError(f"{where}: must be finite, got {val!r}")
    return out


def _floats(obj, where: str):
    """Convert Decimal/numeric strings to floats, recursively (ints and flags kept)."""
    if isinstance(obj, dict):
        return {k: _floats(v, f"{where}.{k}") for k, v in obj.items()}
    if isinstance(obj, list):
        return [_floats(v, f"{where}[{i}]") for i, v in enumerate(obj)]
    if isinstance(obj, bool) or isinstance(obj, int) or obj is None:
        return obj
    if where.endswith(".n") and isinstance(obj, str):
        return int(obj)
    if isinstance(obj, (Decimal, float)):
        return _to_float(obj, where)
    if isinstance(obj, str) and where.split(".")[-1] not in ("kind", "mode", "parameter", "file", "dir"):
        return _to_float(obj, where)
    return obj


def _schema_path(err: jsonschema.ValidationError) -> str:
    return "config" + "".join(f"[{p!r}]" if isinstance(p, int) else f".{p}" for p in err.absolute_path)


def load_config_text(text: str, base_dir: Optional[Path] = None) -> RunConfig:
    try:
        doc = json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise ConfigError(f"{_schema_path(err)}: {err.message}")
    base_dir = base_dir or Path.cwd()
    try:
        if "params" in doc:
            pdict = _floats(doc["params"], "config.params")
            pdict.setdefault("k", 0.0)
            params = ModelParams(**pdict)
        else:
            params = nondimensionalize(RawParams(**_floats(doc["raw_params"], "config.raw_params")))
    except DomainError as exc:
        raise ConfigError(f"config.params: {exc}") from exc
    options = _floats(doc.get("options", {}), "config.options")
    fear = options.get("fear_field")
    if fear and fear.get("kind") == "tabulated" and "file" in fear:
        path = Path(fear["file"])
        if not path.is_absolute():
            path = base_dir / path
        if not path.exists():
            raise ConfigError(f"config.options.fear_field.file: no such file {str(path)!r}")
        fear["file"] = str(path)
    out = doc.get("output", {})
    return RunConfig(
        analysis=doc["analysis"],
        params=params,
        options=options,
        out_dir=out.get("dir"),
        formats=tuple(out.get("formats", FORMATS)),
        source=doc,
    )


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {str(path)!r}: {exc}") from exc
    return load_config_text(text, base_dir=path.parent)


def schema_json() -> str:
    return json.dumps(CONFIG_SCHEMA, indent=2)
