import json

import pytest

from conftest import KEPLER_PERIOD
from lrl_lab.cli import run

KEPLER_FLAGS = ["--model", "kepler", "--r0", "1,0,0", "--v0", "0,1.2,0"]


def test_expr(capsys):
    assert run(["expr", "a*sin(th)", "--at", "0", "--param", "a=3"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["value"] == pytest.approx(0.0)
    assert data["derivative_value"] == pytest.approx(3.0)


def test_period_from_flags(capsys):
    assert run(["-v", "period", *KEPLER_FLAGS]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["T"] == pytest.approx(KEPLER_PERIOD)


def test_config_file_with_flag_override(kepler_config, tmp_path, capsys):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(kepler_config), encoding="utf-8")
    assert run(["orbit", "--config", str(path), "--count", "4", "--format", "json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["family"] == "kepler"
    assert len(data["rows"]) == 4


def test_csv_to_file(tmp_path, capsys):
    target = tmp_path / "orbit.csv"
    assert run(["orbit", *KEPLER_FLAGS, "--count", "3", "--out", str(target)]) == 0
    message = json.loads(capsys.readouterr().out)
    assert message["success"] is True
    assert message["path"] == str(target)
    assert target.read_text(encoding="utf-8").splitlines()[0] == "theta,r"


def test_usage_errors_exit_2(capsys):
    assert run(["simulate", "--model", "kepler"]) == 2
    assert "initial state" in capsys.readouterr().err
    assert run(["simulate", "--r0", "1,0", "--v0", "0,1,0", "--model", "kepler"]) == 2
    assert run(["schema", "nope"]) == 2
    assert run(["no-such-command"]) == 2


def test_invalid_config_exits_2(capsys):
    assert run(["simulate", "--model", "yukawa", "--r0", "1,0,0", "--v0", "0,1,0"]) == 2
    assert "invalid configuration" in capsys.readouterr().err


def test_domain_error_exits_1(capsys):
    assert run(["period", "--model", "kepler", "--r0", "1,0,0", "--v0", "0,2,0"]) == 1
    error = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["success"] is False
    assert error["error"]["code"] == "VAL_BAD_PARAMETER"


def test_schema(capsys):
    assert run(["schema"]) == 0
    assert "properties" in json.loads(capsys.readouterr().out)
    assert run(["schema", "pbcheck"]) == 0
