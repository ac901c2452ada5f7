import csv
import io
import json
from pathlib import Path

import pytest

from wcdfp.cli import EXPERIMENT_COLUMNS, VERIFY_COLUMNS, main

DATA = Path(__file__).parent / "data"
TWO_TASK = str(DATA / "two_task.json")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_analyze_two_task(capsys):
    code, out, _ = run(capsys, "analyze", "--taskset", TWO_TASK, "--k", "2")
    assert code == 0
    report = json.loads(out)
    assert report["bound_improved"] >= 0.75
    assert report["rho"]["rho"] == 0.5
    code, again, _ = run(capsys, "analyze", "--taskset", TWO_TASK, "--k", "2")
    assert again == out


def test_analyze_chernoff(capsys):
    code, out, _ = run(capsys, "analyze", "--taskset", TWO_TASK, "--method", "chernoff")
    assert code == 0 and json.loads(out)["method"] == "chernoff"


def test_analyze_k_out_of_range(capsys):
    code, _, err = run(capsys, "analyze", "--taskset", TWO_TASK, "--k", "3")
    assert code == 2 and "out of range" in err


def test_analyze_invalid_set(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"tasks": [{"T": 4, "D": 5, "pwcet": [[1, 1.0]]}]}))
    code, _, err = run(capsys, "analyze", "--taskset", str(path))
    assert code == 2 and "deadline exceeds period" in err


def test_analyze_out_file(tmp_path, capsys):
    out = tmp_path / "report.json"
    code, stdout, _ = run(capsys, "analyze", "--taskset", TWO_TASK, "--out", str(out))
    assert code == 0 and stdout == ""
    assert json.loads(out.read_text())["N"] == 2


def test_experiment_golden(capsys):
    code, out, _ = run(capsys, "experiment", "--sets", "3", "--seed", "1", "--no-timing")
    assert code == 0
    assert out == (DATA / "experiment_seed1.csv").read_text()


def test_experiment_seed_from_env(capsys, monkeypatch):
    monkeypatch.setenv("WCDFP_SEED", "1")
    code, out, _ = run(capsys, "experiment", "--sets", "3", "--no-timing")
    assert out == (DATA / "experiment_seed1.csv").read_text()


def test_experiment_rows(capsys):
    code, out, _ = run(capsys, "experiment", "--sets", "4", "--seed", "5", "--n", "3", "4",
                       "--usum", "0.6", "0.8", "--method", "chernoff")
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == EXPERIMENT_COLUMNS
    assert len(rows) == 16
    for row in rows:
        assert row["errors"] == ""
        assert 0 <= float(row["bound_improved"]) <= float(row["bound_basic"]) <= 1


def test_experiment_chernoff_not_below_convolution(capsys):
    _, conv, _ = run(capsys, "experiment", "--sets", "5", "--seed", "9", "--no-timing")
    _, cher, _ = run(capsys, "experiment", "--sets", "5", "--seed", "9", "--no-timing", "--method", "chernoff")
    for a, b in zip(csv.DictReader(io.StringIO(conv)), csv.DictReader(io.StringIO(cher))):
        assert a["seed"] == b["seed"]
        assert float(b["rho"]) >= float(a["rho"]) - 1e-12
        if a["m"] == b["m"] and a["N"] == b["N"]:
            assert float(b["bound_improved"]) >= float(a["bound_improved"]) * (1 - 1e-9)


def test_verify_two_task(capsys):
    code, out, err = run(capsys, "verify", "--taskset", TWO_TASK, "--budget", "50")
    assert code == 0
    (row,) = list(csv.DictReader(io.StringIO(out)))
    assert list(row) == VERIFY_COLUMNS
    assert float(row["dfp"]) == pytest.approx(0.75)
    assert float(row["ratio"]) <= 1
    assert "failures 0" in err


def test_verify_deterministic_set(tmp_path, capsys):
    path = tmp_path / "det.json"
    path.write_text(json.dumps({"tasks": [{"T": 5, "D": 5, "pwcet": [[1, 1.0]]},
                                          {"T": 10, "D": 10, "pwcet": [[3, 1.0]]}]}))
    code, out, _ = run(capsys, "verify", "--taskset", str(path), "--budget", "20")
    (row,) = list(csv.DictReader(io.StringIO(out)))
    assert code == 0 and float(row["dfp"]) == 0.0 and float(row["ratio"]) == 0.0


def test_verify_generated(capsys):
    code, out, _ = run(capsys, "verify", "--sets", "3", "--budget", "10", "--seed", "2")
    assert code == 0
    assert all(r["ok"] == "1" for r in csv.DictReader(io.StringIO(out)))
