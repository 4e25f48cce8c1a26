import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from torusnf import checks, presets, report
from torusnf.cli import EXIT_BAD_CONFIG, EXIT_OK, main
from torusnf.config import ConfigError, RunConfig


@pytest.mark.parametrize("name", presets.names())
def test_presets_validate(name):
    presets.get(name).validate()


@pytest.mark.parametrize("name", presets.names())
def test_config_round_trip(name, tmp_path):
    cfg = presets.get(name)
    path = tmp_path / "c.yaml"
    cfg.save(path)
    once = RunConfig.load(path)
    once.save(path)
    twice = RunConfig.load(path)
    assert once.to_dict() == twice.to_dict() == cfg.to_dict()


@given(st.floats(0.3, 0.95), st.floats(0.1, 0.49), st.integers(0, 10**6))
def test_round_trip_of_edited_configs(delta, gamma, seed):
    cfg = presets.get("square-2d").with_seed(seed)
    cfg.nf["delta"] = delta
    cfg.nf["gamma"] = gamma
    assert RunConfig.loads(RunConfig.loads(cfg.dumps()).dumps()).to_dict() == cfg.to_dict()


def test_invalid_params_rejected_on_load():
    cfg = presets.get("square-2d")
    cfg.nf["gamma"] = 0.7
    with pytest.raises(ConfigError) as info:
        RunConfig.loads(cfg.dumps()).validate()
    assert any("gamma" in p for p in info.value.problems)


def test_dual_command(tmp_path, capsys):
    assert main(["dual", "--preset", "square-2d", "--out", str(tmp_path)]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out[:2] == ["1 0", "0 1"] and out[2] == "r = 0.5"
    assert json.loads((tmp_path / "dual.json").read_text())["r"] == 0.5


def test_expand_with_zero_potential(tmp_path):
    cfg = presets.get("square-2d")
    cfg.perturbation = []
    path = tmp_path / "free.yaml"
    cfg.save(path)
    assert main(["expand", "--config", str(path), "--out", str(tmp_path)]) == EXIT_OK
    rows = list(csv.DictReader(io.StringIO((tmp_path / "expand.csv").read_text())))
    assert rows and all(float(r[k]) == 0.0 for r in rows for k in r if k.startswith("z_"))


def test_invalid_config_gives_machine_readable_error(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    cfg = presets.get("square-2d")
    cfg.nf["delta"] = 1.5
    cfg.save(path)
    assert main(["census", "--config", str(path)]) == EXIT_BAD_CONFIG
    doc = json.loads(capsys.readouterr().err)
    assert doc["error"] == "invalid config" and doc["problems"]


def test_malformed_yaml(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text("lattice: [unclosed\n")
    assert main(["dual", "--config", str(path)]) == EXIT_BAD_CONFIG
    assert json.loads(capsys.readouterr().err)["problems"]


def test_unknown_preset(capsys):
    assert main(["dual", "--preset", "nope"]) == EXIT_BAD_CONFIG
    assert "unknown preset" in capsys.readouterr().err


def test_census_byte_identical_on_rerun(tmp_path):
    cfg = presets.get("square-2d")
    cfg.census["R_list"] = [20, 40]
    path = tmp_path / "c.yaml"
    cfg.save(path)
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["census", "--config", str(path), "--out", str(a), "--seed", "4"]) == EXIT_OK
    assert main(["census", "--config", str(path), "--out", str(b), "--seed", "4"]) == EXIT_OK
    assert (a / "census.csv").read_bytes() == (b / "census.csv").read_bytes()


def test_spectrum_and_quasimode_commands(tmp_path):
    cfg = presets.get("mathieu-1d")
    cfg.R_trunc = 40
    cfg.probe = [[16.0], [24.0]]
    path = tmp_path / "m.yaml"
    cfg.save(path)
    assert main(["spectrum", "--config", str(path), "--out", str(tmp_path), "--threads", "1"]) == EXIT_OK
    spec = list(csv.DictReader(io.StringIO((tmp_path / "spectrum.csv").read_text())))
    assert len(spec) == 81
    assert main(["quasimode", "--config", str(path), "--out", str(tmp_path)]) == EXIT_OK
    rows = list(csv.DictReader(io.StringIO((tmp_path / "quasimodes.csv").read_text())))
    assert [r["xi"] for r in rows] == ["16.0", "24.0"]
    assert all(float(r["abs_error"]) < 1e-3 for r in rows)


def test_verify_subset_report_validates(tmp_path):
    assert main(["verify", "--preset", "mathieu-1d", "--out", str(tmp_path), "--criteria", "1,2,4"]) == EXIT_OK
    doc = json.loads((tmp_path / "verify.json").read_text())
    assert report.validate_report(doc) == []
    assert [c["number"] for c in doc["criteria"]] == [1, 2, 4]


def test_verify_report_is_byte_stable(tmp_path):
    for sub in ("a", "b"):
        main(["verify", "--preset", "mathieu-1d", "--out", str(tmp_path / sub), "--criteria", "3"])
    assert (tmp_path / "a" / "verify.json").read_bytes() == (tmp_path / "b" / "verify.json").read_bytes()


def test_bad_criteria_list(capsys):
    assert main(["verify", "--preset", "mathieu-1d", "--criteria", "99"]) == EXIT_BAD_CONFIG


def test_empty_results_give_valid_files(tmp_path):
    report.write_csv(tmp_path / "e.csv", [], report.CENSUS_FIELDS)
    assert (tmp_path / "e.csv").read_text() == ",".join(report.CENSUS_FIELDS) + "\n"
    doc = report.verify_report([], 0, "x")
    report.write_json(tmp_path / "e.json", doc)
    assert report.validate_report(json.loads((tmp_path / "e.json").read_text())) == []


def test_schema_validator_catches_problems():
    assert report.validate_report([]) == ["report is not an object"]
    doc = report.verify_report([checks.CheckResult(1, "x", True, "t")], 0, "v")
    doc["criteria"][0]["passed"] = "yes"
    del doc["seed"]
    problems = report.validate_report(doc)
    assert any("seed" in p for p in problems) and any("boolean" in p for p in problems)


def test_jsonable_handles_numpy_and_infinities():
    doc = checks.jsonable({"a": np.float64(-np.inf), "b": np.arange(2), "c": np.bool_(True)})
    assert doc == {"a": "-inf", "b": [0, 1], "c": True}
