import json

import pytest

from hyperaccel_engine.cli import EXIT_FAILED, EXIT_INPUT, EXIT_OK, EXIT_TOO_SLOW, main
from hyperaccel_engine.library import EXPORT_COLUMNS
from hyperaccel_engine.settings import Settings

from conftest import REPO_ROOT


@pytest.fixture(autouse=True)
def data_env(monkeypatch, data_dir):
    monkeypatch.setenv("HYPERACCEL_DATA_DIR", str(data_dir))


def test_settings_from_env(data_dir):
    s = Settings.from_env({"HYPERACCEL_DATA_DIR": str(data_dir), "HYPERACCEL_TERM_CAP": "500", "HYPERACCEL_SEED": ""})
    assert s.data_dir == data_dir
    assert s.term_cap == 500
    assert s.seed == 0
    assert s.with_overrides(seed=None, jobs=3).jobs == 3


def test_verify_passing_identity(capsys):
    assert main(["verify", "--identity", "ZETA2_RATE64", "--digits", "40"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "ZETA2_RATE64" in out
    assert "pass=1" in out


def test_verify_unknown_identity():
    assert main(["verify", "--identity", "NOT_AN_IDENTITY"]) == EXIT_INPUT


def test_verify_rate_one_identity_is_too_slow():
    assert main(["verify", "--identity", "T1_IPI_1", "--digits", "20"]) == EXIT_TOO_SLOW


def test_verify_beyond_reference_digits():
    assert main(["verify", "--identity", "ZETA2_RATE64", "--digits", "500"]) == EXIT_INPUT


def test_certify_shipped_file(capsys):
    code = main(["certify", str(REPO_ROOT / "data" / "certificates" / "t31_x.cert")])
    assert code == EXIT_OK
    report = json.loads(capsys.readouterr().out)
    assert report["valid"] is True
    assert report["parameters"] == ["y"]
    boundary = report["boundary"]
    assert boundary["g_difference"] == boundary["f_difference"]


def test_certify_rejects_a_wrong_certificate(tmp_path):
    text = (REPO_ROOT / "data" / "certificates" / "t31_x.cert").read_text(encoding="utf-8")
    bad = tmp_path / "bad.cert"
    bad.write_text(text.replace("2*n^2", "3*n^2"), encoding="utf-8")
    assert main(["certify", str(bad)]) == EXIT_FAILED


def test_certify_missing_file(tmp_path):
    assert main(["certify", str(tmp_path / "absent.cert")]) == EXIT_INPUT


def test_eval_formula(capsys):
    assert main(["eval", "2^(-n)", "--digits", "20"]) == EXIT_OK
    result = json.loads(capsys.readouterr().out)
    assert abs(float(result["value"]) - 2) < 1e-15
    assert result["digits_correct"] >= 20


def test_eval_rejects_bad_formula():
    assert main(["eval", "2^(-n", "--digits", "20"]) == EXIT_INPUT


def test_eval_rate_one_formula_is_too_slow():
    assert main(["eval", "1/(n+1)^2", "--digits", "20"]) == EXIT_TOO_SLOW


def test_rate_command(capsys):
    assert main(["rate", "ZETA2_RATE4"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "limit = 1/4" in out


def test_accel_command(capsys):
    assert main(["accel", "T3M1_Y2", "--x", "1/2", "--y", "2", "--steps", "6"]) == EXIT_OK
    assert "LUPAS_WOLFRAM" in capsys.readouterr().out


def test_export_csv(tmp_path):
    target = tmp_path / "catalog.csv"
    assert main(["export", "--format", "csv", "--output", str(target)]) == EXIT_OK
    header = target.read_text(encoding="utf-8").splitlines()[0]
    assert header.split(",") == EXPORT_COLUMNS


def test_sweep_command(capsys):
    assert main(["sweep", "--id", "T31_X", "--n-max", "4", "--samples", "2"]) == EXIT_OK
    assert "failures=0" in capsys.readouterr().out


def test_constants_command_reports_full_agreement(capsys):
    assert main(["constants"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("agrees=125") == 10


def test_constants_regenerate_into_empty_directory(monkeypatch, tmp_path, capsys):
    monkeypatch.setenv("HYPERACCEL_DATA_DIR", str(tmp_path))
    assert main(["constants", "--regenerate"]) == EXIT_OK
    assert "regenerated" in capsys.readouterr().out
    assert (tmp_path / "reference_constants.json").exists()
