import json
import math

import pytest

from pressure_lab.cli import main

MORAN = {"system": {"matrices": [[[0.5]], [[0.3333333333333333]]]}}


def write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_pressure_json(tmp_path, capsys):
    code, out, _ = run(capsys, "pressure", "--config", write(tmp_path, MORAN), "--s", "1")
    assert code == 0
    rep = json.loads(out)
    assert rep["schema"] == "pressure-lab/report/v1"
    assert rep["config"]["pressure"]["s"] == 1.0
    assert rep["result"]["point"] == pytest.approx(math.log(5 / 6), abs=1e-12)


def test_pressure_csv_to_file(tmp_path, capsys):
    out_path = tmp_path / "out.csv"
    code, out, _ = run(capsys, "pressure", "--config", write(tmp_path, MORAN), "--format", "csv",
                       "--out", str(out_path), "--n-max", "4")
    assert code == 0 and out == ""
    lines = out_path.read_text().splitlines()
    assert lines[0] == "quantity,n,value"
    assert sum(1 for line in lines if line.startswith("level,")) == 4


def test_s_vec_flag(tmp_path, capsys):
    cfg = {"system": {"matrices": [[[0.5, 0], [0, 0.25]]]}}
    code, out, _ = run(capsys, "pressure", "--config", write(tmp_path, cfg), "--s-vec", "1,0.5", "--n-max", "3")
    assert code == 0
    assert json.loads(out)["result"]["exponent"] == [1.0, 0.5]
    code, _, err = run(capsys, "pressure", "--config", write(tmp_path, cfg), "--s-vec", "1,x")
    assert code == 2 and "--s-vec" in err


def test_malformed_row_exit_2(tmp_path, capsys):
    code, _, err = run(capsys, "pressure", "--config", write(tmp_path, {"system": {"matrices": [[[0.5, 0], [0]]]}}))
    assert code == 2
    assert "system.matrices[0][1]" in err


def test_budget_exit_3(tmp_path, capsys):
    code, _, err = run(capsys, "pressure", "--config", write(tmp_path, MORAN), "--n-max", "30")
    assert code == 3
    assert "budgets.word_budget" in err


def test_dimension_warns_and_matches(tmp_path, capsys):
    code, out, err = run(capsys, "dimension", "--config", write(tmp_path, MORAN))
    assert code == 0
    assert err.startswith("warning:")
    assert json.loads(out)["result"]["value"] == pytest.approx(0.7878849110258697, abs=1e-7)


def test_dimension_expanding_exit_2(tmp_path, capsys):
    code, _, err = run(capsys, "dimension", "--config", write(tmp_path, {"system": {"matrices": [[[2.0]], [[0.3]]]}}))
    assert code == 2
    assert "contraction" in err


def test_jsr_golden(tmp_path, capsys):
    cfg = {"system": {"matrices": [[[1, 1], [0, 1]], [[1, 0], [1, 1]]]}, "jsr": {"n": 6}}
    code, out, _ = run(capsys, "jsr", "--config", write(tmp_path, cfg))
    assert code == 0
    assert json.loads(out)["result"]["lower"] == pytest.approx((1 + 5**0.5) / 2, abs=1e-12)


def test_spectrum_command(tmp_path, capsys):
    cfg = dict(MORAN, spectrum={"horizon": 200, "trials": 4, "s": [0.5], "q_grid": [0.5, 1.0, 1.5]})
    code, out, _ = run(capsys, "spectrum", "--config", write(tmp_path, cfg), "--n-max", "6")
    assert code == 0
    res = json.loads(out)["result"]
    assert res["svf_rates"][0]["consistent"]
    assert len(res["legendre"]["points"]) == 3
    assert res["equilibrium"]["residual"] < 1e-12


@pytest.mark.parametrize("kind", ["pressure", "dimension", "joint", "demo"])
def test_continuity_kinds(tmp_path, capsys, kind):
    cfg = {
        "system": {"matrices": [[[0.4, 0.1], [0.0, 0.3]], [[0.3, 0.0], [0.1, 0.2]]]},
        "continuity": {"kind": kind, "epsilons": [1e-2, 1e-3], "s_values": [1.0, 1.2]},
        "budgets": {"n_max": 6},
    }
    code, out, _ = run(capsys, "continuity", "--config", write(tmp_path, cfg))
    assert code == 0
    res = json.loads(out)["result"]
    assert all(res["checks"].values()), res["checks"]


def test_cones_command(tmp_path, capsys):
    cfg = {"system": {"matrices": [[[1, 1], [1, 1.5]], [[1.2, 1], [1, 1]]]},
           "cones": {"axis": [1, 1], "source_aperture": 0.3, "target_aperture": 0.05}}
    code, out, _ = run(capsys, "cones", "--config", write(tmp_path, cfg))
    assert code == 0
    res = json.loads(out)["result"]
    assert all(c["holds"] for c in res["certificates"])
    assert res["almost_mult_constant"] > 0


def test_verify_suites(capsys):
    code, out, _ = run(capsys, "verify", "symbolic")
    assert code == 0 and out.startswith("PASS symbolic.")
    code, _, err = run(capsys, "verify", "nosuch")
    assert code == 2
    assert "svf" in err and "cones" in err


def test_missing_config_exit_2(tmp_path, capsys):
    code, _, err = run(capsys, "pressure", "--config", str(tmp_path / "none.json"))
    assert code == 2 and "--config" in err


def test_identical_runs_are_byte_identical(tmp_path, capsys):
    path = write(tmp_path, dict(MORAN, spectrum={"horizon": 100, "trials": 3, "s": [0.7]}))
    outs = [run(capsys, "spectrum", "--config", path, "--seed", "5")[1] for _ in range(2)]
    assert outs[0] == outs[1]
