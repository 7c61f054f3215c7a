import csv
import json

import numpy as np
import pytest

from sieveifs.cli import main
from sieveifs.svg import read_scatter_svg

SMALL = {
    "simulate-path": ["--n", "3"],
    "marginal-test": ["--n", "500"],
    "covariance": ["--n", "2000"],
    "variation": ["--n", "20"],
    "integrate": ["--n", "50", "--a-values", "0.5,0.25"],
    "markov-check": ["--n", "500", "--x", "0.5", "--u", "0.5"],
    "generator": ["--n", "0"],
    "dimension": ["--kmin", "3", "--kmax", "6"],
    "scatter": ["--n", "300"],
    "battery": ["--only", "4"],
}
FORMAT = {"simulate-path": "csv", "variation": "csv", "scatter": "svg"}


@pytest.mark.parametrize("command", sorted(SMALL))
def test_command_writes_artifact_and_manifest(tmp_path, command):
    code = main([command, "--seed", "1", "--output", str(tmp_path), *SMALL[command]])
    assert code in (0, 1)
    art = tmp_path / f"{command}.{FORMAT.get(command, 'json')}"
    assert art.exists()
    manifest = json.loads((tmp_path / (art.name + ".manifest.json")).read_text())
    assert manifest["seed"] == 1 and manifest["schema_version"] == 1
    assert manifest["config"]["command"] == command
    assert "git_describe" in manifest and "version" in manifest


def test_byte_identical_rerun(tmp_path):
    outs = []
    for i in range(2):
        path = tmp_path / f"run{i}.csv"
        assert main(["simulate-path", "--seed", "7", "--n", "4", "--output", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    rows = list(csv.reader(outs[0].decode().splitlines()))
    assert rows[0] == ["replicate", "x", "value"]
    assert outs[0].count(b"\r\n") == len(rows)


def test_errors_exit_two_with_json(tmp_path, capsys):
    assert main(["marginal-test", "--x", "-1", "--output", str(tmp_path)]) == 2
    err = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
    assert err["error"] == "ConfigurationError" and err["message"]
    assert main(["no-such-command"]) == 2
    assert main(["dimension", "--kmin", "4", "--kmax", "12", "--output", str(tmp_path)]) == 2
    assert json.loads(capsys.readouterr().err.strip().splitlines()[-1])["error"] == "EnumerationCostError"


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"lambda": 0.25, "n": 0}))
    out = tmp_path / "g.json"
    assert main(["generator", "--config", str(cfg), "--output", str(out)]) == 0
    assert json.loads(out.read_text())["lambda"] == 0.25
    assert main(["generator", "--config", str(cfg), "--lambda", "0.5", "--output", str(out)]) == 0
    assert json.loads(out.read_text())["lambda"] == 0.5


def test_env_default_directory(tmp_path, monkeypatch):
    target = tmp_path / "nested" / "out"
    monkeypatch.setenv("SIEVEIFS_OUTPUT_DIR", str(target))
    assert main(["generator", "--n", "0"]) == 0
    assert (target / "generator.json").exists()


def test_scatter_points_in_square(tmp_path):
    out = tmp_path / "s.svg"
    assert main(["scatter", "--n", "400", "--seed", "2", "--output", str(out)]) == 0
    pts = read_scatter_svg(out.read_text())
    assert pts.shape == (400, 2)
    assert np.all((pts >= 0) & (pts <= 2))


def test_battery_subset(tmp_path, capsys):
    out = tmp_path / "b.json"
    assert main(["battery", "--only", "2,4", "--seed", "1", "--output", str(out)]) == 0
    lines = [json.loads(l) for l in out.read_text().splitlines()]
    assert len(lines) == 2 and all(l["passed"] for l in lines)
    assert "criterion" in capsys.readouterr().err
