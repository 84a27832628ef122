from __future__ import annotations

import csv
import json

import pytest

from hybridservo.cli import CSV_COLUMNS, main


def _write_scenario(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def _tilting_doc(params=None, solver=None):
    return {
        "schema": 1,
        "scenario_type": "block_tilting",
        "params": params or {},
        "solver": solver or {},
    }


def _raw_doc(params, solver=None):
    return {
        "schema": 1,
        "scenario_type": "raw_instance",
        "params": params,
        "solver": solver or {},
    }


def _supported_object_params():
    return {
        "n_u": 1,
        "N": [[1.0, -1.0]],
        "G": [[1.0, 0.0]],
        "b_G": [0.1],
        "F": [-2.45, 0.0],
        "Lambda": [[-1.0, 0.0, 0.0]],
        "b_Lambda": [-0.5],
    }


def test_default_tilting_run(tmp_path):
    scenario = _write_scenario(tmp_path / "scenario.json", _tilting_doc())
    out = tmp_path / "out.json"
    assert main(["--scenario", scenario, "--out", str(out), "--verify"]) == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == 1
    assert doc["all_verified"] is True
    assert len(doc["steps"]) == 15
    for step in doc["steps"]:
        assert step["n_av"] == 1
        assert step["n_af"] == 2
        assert step["newton_residual"] <= 1e-6
        assert step["lp_margin"] > 0.0
        assert min(step["guard_margins"]) >= 0.0
        assert step["verification"]["passed"] is True


def test_output_json_is_deterministic(tmp_path):
    scenario = _write_scenario(tmp_path / "scenario.json", _tilting_doc())
    out_a = tmp_path / "a.json"
    out_b = tmp_path / "b.json"
    assert main(["--scenario", scenario, "--out", str(out_a)]) == 0
    assert main(["--scenario", scenario, "--out", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()


def test_csv_has_per_step_rows_and_median(tmp_path):
    scenario = _write_scenario(tmp_path / "scenario.json", _tilting_doc())
    out = tmp_path / "out.json"
    assert main(["--scenario", scenario, "--out", str(out), "--csv"]) == 0
    with (tmp_path / "out.csv").open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == CSV_COLUMNS
    assert len(rows) == 1 + 15 + 1
    for row in rows[1:-1]:
        assert int(row[1]) == 1  # n_av
        assert float(row[4]) <= 1e-6  # newton residual
        float(row[5]), float(row[6])  # timings parse
    assert rows[-1][0] == "median"
    assert float(rows[-1][5]) >= 0.0
    assert float(rows[-1][6]) >= 0.0


def test_raw_instance_roundtrip(tmp_path):
    scenario = _write_scenario(
        tmp_path / "scenario.json", _raw_doc(_supported_object_params())
    )
    out = tmp_path / "out.json"
    assert main(["--scenario", scenario, "--out", str(out), "--verify"]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["steps"]) == 1
    step = doc["steps"][0]
    assert step["lambda"][0] == pytest.approx(2.45, abs=1e-7)
    assert step["lp_margin"] == pytest.approx(1.95, abs=1e-6)
    assert step["verification"]["passed"] is True


def test_solver_overrides_reach_output(tmp_path):
    scenario = _write_scenario(
        tmp_path / "scenario.json", _tilting_doc(solver={"f_max": 25.0, "rng_seed": 7})
    )
    out = tmp_path / "out.json"
    assert main(["--scenario", scenario, "--out", str(out), "--f-max", "10.0"]) == 0
    doc = json.loads(out.read_text())
    # Command line wins over the scenario file; untouched keys pass through.
    assert doc["solver"]["f_max"] == 10.0
    assert doc["solver"]["rng_seed"] == 7


def test_verification_absent_without_flag(tmp_path):
    scenario = _write_scenario(tmp_path / "scenario.json", _tilting_doc())
    out = tmp_path / "out.json"
    assert main(["--scenario", scenario, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["all_verified"] is None
    assert all(step["verification"] is None for step in doc["steps"])


def test_missing_scenario_file_is_parse_error(tmp_path, capsys):
    out = tmp_path / "out.json"
    code = main(["--scenario", str(tmp_path / "nope.json"), "--out", str(out)])
    assert code == 4
    assert "error:" in capsys.readouterr().err


def test_invalid_json_is_parse_error(tmp_path, capsys):
    bad = tmp_path / "scenario.json"
    bad.write_text("{not json")
    assert main(["--scenario", str(bad), "--out", str(tmp_path / "o.json")]) == 4
    assert "error:" in capsys.readouterr().err


def test_unknown_keys_are_parse_errors(tmp_path, capsys):
    doc = _tilting_doc()
    doc["params"]["tilt_angle"] = 1.0
    scenario = _write_scenario(tmp_path / "scenario.json", doc)
    assert main(["--scenario", scenario, "--out", str(tmp_path / "o.json")]) == 4
    assert "tilt_angle" in capsys.readouterr().err


def test_wrong_schema_version_is_parse_error(tmp_path, capsys):
    doc = _tilting_doc()
    doc["schema"] = 2
    scenario = _write_scenario(tmp_path / "scenario.json", doc)
    assert main(["--scenario", scenario, "--out", str(tmp_path / "o.json")]) == 4
    assert "schema" in capsys.readouterr().err


def test_velocity_infeasible_returns_2(tmp_path, capsys):
    params = {
        "n_u": 2,
        "N": [[1.0, 0.0, 0.0]],
        "G": [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        "b_G": [0.1, 0.2],
        "F": [0.0, 0.0, 0.0],
    }
    scenario = _write_scenario(tmp_path / "scenario.json", _raw_doc(params))
    assert main(["--scenario", scenario, "--out", str(tmp_path / "o.json")]) == 2
    assert capsys.readouterr().err.startswith("step 1:")


def test_force_infeasible_returns_3(tmp_path, capsys):
    scenario = _write_scenario(
        tmp_path / "scenario.json", _tilting_doc(params={"mu_table": 0.0})
    )
    assert main(["--scenario", scenario, "--out", str(tmp_path / "o.json")]) == 3
    err = capsys.readouterr().err
    assert err.startswith("step 1:")
    assert "margin" in err
