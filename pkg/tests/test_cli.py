import json
import subprocess
import sys

import pytest

from wassprox.cli import main


def write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    for name in ["ou", "lti", "bimodal", "mckean-vlasov", "cir", "satellite"]:
        assert name in out


def test_validate_prints_filled_config(tmp_path, capsys):
    assert main(["validate", "--config", write(tmp_path, "scenario = ou\n")]) == 0
    out = capsys.readouterr().out
    assert "epsilon = 0.05" in out and "N = 400" in out


@pytest.mark.parametrize("text", ["scenario = foo\n", "scenario = ou\nepsilon = 0\n", "scenario = ou\nK = 0\n"])
def test_validate_config_error(tmp_path, capsys, text):
    assert main(["validate", "--config", write(tmp_path, text)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "config"


def test_missing_config_file(tmp_path):
    assert main(["validate", "--config", str(tmp_path / "nope.cfg")]) == 2


def test_run_with_overrides(tmp_path):
    cfg = write(tmp_path, "scenario = ou\nK = 4\nN = 15\nstride = 2\n")
    out = tmp_path / "out"
    assert main(["run", "--config", cfg, "--seed", "3", "--out", str(out)]) == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["seed"] == 3
    assert manifest["config"]["out"] == str(out)


def test_run_seed_reproducible(tmp_path):
    cfg = write(tmp_path, "scenario = mckean-vlasov\nK = 4\nN = 15\n")
    for d in "ab":
        assert main(["run", "--config", cfg, "--seed", "8", "--out", str(tmp_path / d)]) == 0
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert ma["numeric_sha1"] == mb["numeric_sha1"]


def test_run_numerical_failure(tmp_path, capsys):
    cfg = write(tmp_path, "scenario = bimodal\nK = 50\nN = 20\nh = 5.0\n")
    assert main(["run", "--config", cfg, "--out", str(tmp_path / "o")]) == 3
    err = json.loads(capsys.readouterr().err)
    assert err["k"] >= 1
    assert (tmp_path / "o" / "error.json").exists()


def test_usage_error():
    assert main(["run"]) == 2


def test_console_entry(tmp_path):
    cfg = write(tmp_path, "scenario = cir\nK = 2\nN = 10\n")
    proc = subprocess.run(
        [sys.executable, "-m", "wassprox.cli", "run", "--config", cfg, "--out", str(tmp_path / "o")],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "o" / "transformed" / "snapshot_k=2.csv").exists()
