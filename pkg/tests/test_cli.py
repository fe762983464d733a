import json

import pytest

from pimet.cli import main


def run(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_rho_wedge_generator(capsys):
    code, out, _ = run(capsys, "rho", "--space", "wedge2.json", "--a", "[1]", "--b", "[]")
    data = json.loads(out)
    assert code == 0
    assert data["lower"] == "1/2" and data["verdict"] == "positive"
    assert data["config"]["seed"] == 0 and data["config"]["budget"]["samples_per_unit_length"] == 64


def test_rho_identity(capsys):
    code, out, _ = run(capsys, "rho", "--space", "wedge2.json", "--a", "[]", "--b", "[]")
    data = json.loads(out)
    assert code == 0 and data["lower"] == "0" and data["upper"] == "0"


def test_rho_csv_and_out_file(capsys, tmp_path):
    target = tmp_path / "r.csv"
    code, out, _ = run(capsys, "rho", "--system", "hawaiian.json", "--a", "[2]", "--format", "csv",
                       "--out", str(target), "--grid", "32")
    assert code == 0 and out == ""
    lines = target.read_text().splitlines()
    assert lines[0].startswith("a,b,lower,upper") and ",1/8," in lines[1]


def test_rho_thread_file(capsys, tmp_path):
    path = tmp_path / "t.json"
    path.write_text(json.dumps({"words": [[], [2]]}))
    code, out, _ = run(capsys, "rho", "--system", "hawaiian.json", "--depth", "2", "--a", str(path))
    assert code == 0 and json.loads(out)["lower"] == "1/8"


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "rho", "--space", "missing.json")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "rho", "--space", str(bad))[0] == 2
    assert run(capsys, "rho", "--space", "wedge2.json", "--a", "[1")[0] == 2
    assert run(capsys, "rho", "--space", "wedge2.json", "--a", "[7]")[0] == 3
    assert run(capsys, "scenario", "nonsense")[0] == 2
    assert run(capsys, "rho", "--space", "wedge2.json", "--grid", "3")[0] == 2
    assert run(capsys, "rho", "--space", "wedge2.json", "--budget", "bogus=1")[0] == 2


def test_data_dir_env(capsys, tmp_path, monkeypatch):
    (tmp_path / "mine.json").write_text(json.dumps({"vertices": 3, "edges": [[0, 1, "1"], [1, 2, "1"], [2, 0, "1"]],
                                                    "triangles": [], "basepoint": 0}))
    monkeypatch.setenv("PIMET_DATA_DIR", str(tmp_path))
    code, out, _ = run(capsys, "rho", "--space", "mine.json", "--a", "[1]")
    assert code == 0 and json.loads(out)["lower"] == "3/2"


def test_scenario_lemmas(capsys):
    code, out, _ = run(capsys, "scenario", "lemmas", "--space", "wedge2.json", "--samples", "10", "--seed", "1")
    data = json.loads(out)
    assert code == 0 and data["status"] == "pass" and data["provenance"]["config"]["seed"] == 1


def test_scenario_punctured_plane_csv(capsys):
    code, out, _ = run(capsys, "scenario", "punctured-plane", "--depth", "8", "--format", "csv")
    assert code == 0 and out.splitlines()[0] == "scenario,check,status,numbers,witnesses"


def test_scenario_is_byte_identical_without_timestamp(capsys):
    args = ("scenario", "sandwich", "--radii", "1/2,1/4", "--samples", "10", "--seed", "7")
    first = json.loads(run(capsys, *args)[1])
    second = json.loads(run(capsys, *args)[1])
    first.pop("timestamp"), second.pop("timestamp")
    assert json.dumps(first, sort_keys=True) == json.dumps(second, sort_keys=True)
    assert first["status"] == "pass"


def test_failing_scenario_exits_one(capsys, monkeypatch):
    from pimet import harness

    def broken(*args, **kwargs):
        return harness.ScenarioReport("lemmas", [harness.Check("x", harness.FAIL, {}, [{"a": [1]}])], {})

    monkeypatch.setattr(harness, "lemma_scenario", broken)
    assert run(capsys, "scenario", "lemmas")[0] == 1


def test_module_entry_point():
    import subprocess
    import sys

    proc = subprocess.run([sys.executable, "-m", "pimet", "rho", "--space", "wedge2.json", "--a", "[2]"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["upper"] == "1/2"
