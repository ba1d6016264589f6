"""Run configuration: a JSON document validated against a schema, with defaults filled in."""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass

import jsonschema
import numpy as np

from .errors import ValidationError
from .levels import Budget
from .pressure import CocycleSpec
from .symbolic import DEFAULT_WORD_BUDGET, MAX_SYMBOLS, MarkovMeasure, Sft, count_words

_NUM = {"type": "number"}
_NUM_LIST = {"type": "array", "items": _NUM}
_POS_LIST = {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["system"],
    "additionalProperties": False,
    "properties": {
        "system": {
            "type": "object",
            "required": ["matrices"],
            "additionalProperties": False,
            "properties": {
                "d": {"type": "integer", "minimum": 1, "maximum": 8},
                "k": {"type": "integer", "minimum": 1, "maximum": MAX_SYMBOLS},
                "transitions": {"type": "array", "items": {"type": "array", "items": {"enum": [0, 1]}}},
                "matrices": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "array", "minItems": 1, "items": {"type": "array", "minItems": 1, "items": _NUM}},
                },
                "potential": _NUM_LIST,
                "require_irreducible": {"type": "boolean"},
            },
        },
        "budgets": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_max": {"type": "integer", "minimum": 1},
                "word_budget": {"type": "integer", "minimum": 1},
                "cache_bytes": {"type": "integer", "minimum": 0},
                "workers": {"type": "integer", "minimum": 1},
            },
        },
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "tolerances": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "dimension_tol": {"type": "number", "minimum": 1e-8},
                "bracket_slack": {"type": "number", "minimum": 0},
            },
        },
        "output": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "format": {"enum": ["csv", "json"]},
                "path": {"type": ["string", "null"]},
            },
        },
        "pressure": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "s": {"type": "number", "minimum": 0},
                "s_vec": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "mode": {"enum": ["svf", "norm"]},
            },
        },
        "jsr": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "minimum": 1},
                "s_large": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "spectrum": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "measure": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {"p": _NUM_LIST, "kernel": {"type": "array", "items": _NUM_LIST}},
                },
                "horizon": {"type": "integer", "minimum": 1},
                "trials": {"type": "integer", "minimum": 1},
                "gap": {"type": "number", "minimum": 0},
                "s": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "q_grid": {"type": ["array", "null"], "items": {"type": "number", "exclusiveMinimum": 0}},
            },
        },
        "continuity": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["pressure", "dimension", "joint", "demo"]},
                "direction": {"type": ["array", "null"]},
                "epsilons": _POS_LIST,
                "s_values": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
            },
        },
        "cones": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "axis": {"type": ["array", "null"], "items": _NUM},
                "source_aperture": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "target_aperture": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "samples": {"type": "integer", "minimum": 1000},
            },
        },
    },
}

DEFAULTS = {
    "budgets": {"n_max": 12, "word_budget": DEFAULT_WORD_BUDGET, "cache_bytes": 2**28, "workers": 1},
    "seed": 0,
    "tolerances": {"dimension_tol": 1e-8, "bracket_slack": 1e-12},
    "output": {"format": "json", "path": None},
    "pressure": {"s": 1.0, "mode": "svf"},
    "jsr": {"n": 12, "s_large": 64.0},
    "spectrum": {"horizon": 10_000, "trials": 64, "gap": 0.05, "s": [], "q_grid": None},
    "continuity": {"kind": "pressure", "direction": None, "epsilons": [1e-1, 1e-2, 1e-3, 1e-4], "s_values": [1.0]},
    "cones": {"axis": None, "source_aperture": 0.5, "target_aperture": 0.2, "samples": 1000},
}


def _merge(defaults, given):
    out = copy.deepcopy(defaults)
    for key, val in given.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = val
    return out


def _path(err):
    return ".".join(str(p) for p in err.absolute_path) or "config"


def _finite(obj, path="config"):
    if isinstance(obj, float) and not math.isfinite(obj):
        raise ValidationError("value must be finite", path)
    if isinstance(obj, dict):
        for k, v in obj.items():
            _finite(v, f"{path}.{k}" if path != "config" else k)
    if isinstance(obj, list):
        for i, v in enumerate(obj):
            _finite(v, f"{path}[{i}]")


@dataclass
class RunConfig:
    """A validated configuration with every optional field resolved."""

    data: dict

    @classmethod
    def from_dict(cls, raw):
        if not isinstance(raw, dict):
            raise ValidationError("config must be a JSON object", "config")
        _finite(raw)
        try:
            jsonschema.validate(raw, SCHEMA)
        except jsonschema.ValidationError as err:
            raise ValidationError(err.message, _path(err)) from None
        data = _merge(DEFAULTS, raw)
        cfg = cls(data)
        cfg.spec()  # surfaces shape errors before any computation
        return cfg

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                raw = json.load(fh, parse_constant=_reject_constant)
        except OSError as exc:
            raise ValidationError(f"cannot read config: {exc.strerror}", "--config") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"invalid JSON at line {exc.lineno}: {exc.msg}", "--config") from None
        return cls.from_dict(raw)

    def __getitem__(self, key):
        return self.data[key]

    def spec(self):
        sysc = self.data["system"]
        mats = sysc["matrices"]
        d = len(mats[0])
        for i, m in enumerate(mats):
            if len(m) != d:
                raise ValidationError(f"expected {d} rows, got {len(m)}", f"system.matrices[{i}]")
            for j, row in enumerate(m):
                if len(row) != d:
                    raise ValidationError(f"expected {d} entries, got {len(row)}", f"system.matrices[{i}][{j}]")
        k = len(mats)
        if "d" in sysc and sysc["d"] != d:
            raise ValidationError(f"d={sysc['d']} but matrices are {d}x{d}", "system.d")
        if "k" in sysc and sysc["k"] != k:
            raise ValidationError(f"k={sysc['k']} but {k} matrices given", "system.k")
        trans = sysc.get("transitions")
        if trans is None:
            sft = Sft(np.ones((k, k), dtype=np.int8), sysc.get("require_irreducible", False))
        else:
            if len(trans) != k or any(len(r) != k for r in trans):
                raise ValidationError(f"transitions must be {k}x{k}", "system.transitions")
            sft = Sft(np.array(trans), sysc.get("require_irreducible", False))
        return CocycleSpec(sft, mats, sysc.get("potential"))

    def budget(self):
        b = self.data["budgets"]
        return Budget.from_env(
            word_budget=b["word_budget"],
            cache_levels=cache_levels(self.spec(), b["cache_bytes"]),
            workers=b["workers"],
        )

    def measure(self, spec):
        m = self.data["spectrum"].get("measure") or {}
        if "kernel" in m:
            return MarkovMeasure.markov(m["kernel"])
        p = m.get("p", [1.0 / spec.k] * spec.k)
        return MarkovMeasure.bernoulli(p)

    def resolved(self):
        """The config with defaults filled in, minus the execution-only worker count."""
        out = copy.deepcopy(self.data)
        out["budgets"].pop("workers", None)
        return out


def _reject_constant(name):
    raise ValidationError(f"non-finite literal {name} not allowed", "config")


def cache_levels(spec, cache_bytes, cap=12):
    """Largest level (at most ``cap``) whose cached arrays fit in ``cache_bytes``."""
    d = spec.d
    per_word = 8 * (d * d + d + 4)
    total, best = 0, 1
    for n in range(1, cap + 1):
        total += count_words(spec.sft, n) * per_word
        if total > cache_bytes:
            break
        best = n
    return best
