import json
import math

import numpy as np
import pytest

from pressure_lab.config import DEFAULTS, RunConfig, cache_levels
from pressure_lab.errors import ValidationError
from pressure_lab.report import SCHEMA, dumps_csv, dumps_json, envelope, format_cell, jsonable

BASE = {"system": {"matrices": [[[0.5]], [[0.25]]]}}


def _cfg(**over):
    raw = json.loads(json.dumps(BASE))
    for k, v in over.items():
        raw[k] = v
    return RunConfig.from_dict(raw)


def test_defaults_are_filled():
    cfg = _cfg()
    for section, vals in DEFAULTS.items():
        if isinstance(vals, dict):
            assert set(vals) <= set(cfg[section])
    assert cfg["budgets"]["n_max"] == 12
    assert "workers" not in cfg.resolved()["budgets"]


@pytest.mark.parametrize(
    "raw,field",
    [
        ({"system": {"matrices": [[[0.5, 1.0], [1.0]]]}}, "system.matrices[0][1]"),
        ({"system": {"matrices": [[[0.5]]], "k": 2}}, "system.k"),
        ({"system": {"matrices": [[[0.5]]]}, "seed": -1}, "seed"),
        ({"system": {"matrices": [[[0.5]]]}, "budgets": {"n_max": 0}}, "budgets.n_max"),
        ({"system": {"matrices": [[[0.5]]]}, "tolerances": {"dimension_tol": 1e-12}}, "tolerances.dimension_tol"),
        ({"system": {"matrices": [[[0.5]]]}, "bogus": 1}, "config"),
        ({"system": {"matrices": [[[0.5]], [[0.5]]], "transitions": [[1, 1]]}}, "system.transitions"),
        ({"system": {"matrices": [[[float("inf")]]]}}, "system.matrices[0][0][0]"),
    ],
)
def test_validation_names_field(raw, field):
    with pytest.raises(ValidationError) as exc:
        RunConfig.from_dict(raw)
    assert exc.value.field == field


def test_load_rejects_nan_literal(tmp_path):
    p = tmp_path / "c.json"
    p.write_text('{"system": {"matrices": [[[NaN]]]}}')
    with pytest.raises(ValidationError):
        RunConfig.load(p)
    with pytest.raises(ValidationError):
        RunConfig.load(tmp_path / "missing.json")


def test_spec_and_measure():
    cfg = _cfg(spectrum={"measure": {"p": [0.3, 0.7]}})
    spec = cfg.spec()
    assert spec.k == 2 and spec.d == 1
    np.testing.assert_allclose(cfg.measure(spec).initial, [0.3, 0.7])


def test_budget_reads_env(monkeypatch):
    monkeypatch.setenv("PRESSURE_LAB_WORKERS", "4")
    assert _cfg().budget().workers == 4


def test_cache_levels_respects_bytes():
    spec = _cfg().spec()
    assert cache_levels(spec, 2**28) == 12
    assert cache_levels(spec, 0) == 1
    assert 1 < cache_levels(spec, 2**16) < 12


def test_jsonable_nonfinite_and_numpy():
    out = jsonable({"a": np.float64(np.inf), "b": [np.int64(3), -math.inf, math.nan], "c": np.array([1.5])})
    assert out == {"a": "inf", "b": [3, "-inf", "nan"], "c": [1.5]}


def test_dumps_json_is_stable():
    rep = envelope("pressure", {"x": 1}, {"v": 0.1})
    text = dumps_json(rep)
    assert text == dumps_json(rep)
    assert json.loads(text)["schema"] == SCHEMA
    assert text.endswith("\n")


def test_csv_format():
    text = dumps_csv(["a", "b"], [{"a": 0.1, "b": None}, {"a": -math.inf, "b": True}])
    assert text.splitlines() == ["a,b", "0.10000000000000001,", "-inf,true"]
    assert float(format_cell(1 / 3)) == 1 / 3
