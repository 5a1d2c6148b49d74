import csv
import json
import subprocess


def run(cli, *args):
    return subprocess.run([cli, *args], capture_output=True, text=True)


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ")
    json.loads(lines[0][2:])
    return list(csv.DictReader(lines[1:]))


def test_help_and_version(cli):
    assert run(cli, "--help").returncode == 0
    assert run(cli, "--version").returncode == 0


def test_pipeline_and_csv_formats(cli, tiny_config, tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps(tiny_config))
    data, out = str(tmp_path / "data"), str(tmp_path / "out")
    model = str(tmp_path / "out" / "model.json")
    common = ["--config", str(config), "--seed", "3"]

    r = run(cli, "gen-data", *common, "--out", data)
    assert r.returncode == 0, r.stderr
    assert "positive ratio" in r.stderr
    r = run(cli, "train", *common, "--data-dir", data, "--model", model)
    assert r.returncode == 0, r.stderr
    r = run(cli, "decode", *common, "--data-dir", data, "--model", model, "--out-dir", out,
            "--outputs", "all")
    assert r.returncode == 0, r.stderr
    rows = read_csv(tmp_path / "out" / "decisions.csv")
    assert list(rows[0]) == ["id", "woke", "wake_frame", "confidence"]
    r = run(cli, "roc", *common, "--data-dir", data, "--model", model, "--out-dir", out)
    assert r.returncode == 0, r.stderr
    assert list(read_csv(tmp_path / "out" / "roc.csv")[0]) == [
        "model", "threshold", "recall", "fa_per_hour"]
    assert list(read_csv(tmp_path / "out" / "summary.csv")[0]) == [
        "fa_per_hour", "model", "recall", "best"]
    r = run(cli, "complexity", "--seed", "1", "--out-dir", out)
    assert r.returncode == 0, r.stderr
    rows = read_csv(tmp_path / "out" / "complexity.csv")
    assert "paper_reference" in rows[0]
    assert {"HNN1", "BASELINE", "MHNN"} <= {row["model"] for row in rows}


def test_print_config_applies_overrides(cli):
    r = run(cli, "decode", "--seed", "7", "--outputs", "all", "--print-config")
    assert r.returncode == 0, r.stderr
    cfg = json.loads(r.stdout)
    assert cfg["seed"] == 7
    assert cfg["strategies"] == ["avg"]


def test_exit_codes(cli, tmp_path):
    assert run(cli, "train", "--epochs", "-1").returncode == 1
    assert run(cli, "decode", "--no-such-flag").returncode == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"seed": }')
    assert run(cli, "complexity", "--config", str(bad)).returncode == 1
    assert run(cli, "complexity", "--config", str(tmp_path / "missing.json")).returncode == 2
    r = run(cli, "train", "--data-dir", str(tmp_path / "nothing"),
            "--model", str(tmp_path / "m.json"))
    assert r.returncode == 2
    data = str(tmp_path / "data")
    assert run(cli, "gen-data", "--out", data, "--utts-per-env", "20",
               "--test-hours", "0.02").returncode == 0
    r = run(cli, "train", "--data-dir", data, "--model", str(tmp_path / "m.json"),
            "--epochs", "2", "--frame-stride", "4", "--lr", "1e10")
    assert r.returncode == 3
    assert "numerical failure" in r.stderr
