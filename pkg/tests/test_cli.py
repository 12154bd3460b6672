import json
import os
import subprocess
import sys

import pytest

from umbilic_lab.catalog import CATALOG
from umbilic_lab.cli import main
from umbilic_lab.runner import THREADS_ENV, resolve_threads
from umbilic_lab.errors import ConfigInvalid

QUICK = {"name": "quick", "entries": ["sphere2"], "suites": ["MainTH-fwd", "COR"],
         "curves": {"seeds": 2, "span": [-0.5, 0.5]}, "grid": {"points": 4}}


def _write(tmp_path, obj, name="s.json"):
    p = tmp_path / name
    p.write_text(obj if isinstance(obj, str) else json.dumps(obj))
    return str(p)


def test_catalog_lists_every_entry(capsys):
    assert main(["catalog"]) == 0
    out = capsys.readouterr().out
    assert all(name in out for name in CATALOG)
    assert main(["catalog", "--json"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert set(data) == set(CATALOG)
    assert data["sphere2"]["flags"]["totally_umbilic"] is True


def test_validate_config(tmp_path, capsys):
    assert main(["validate-config", "--scenario", "full"]) == 0
    assert "ok" in capsys.readouterr().out
    assert main(["validate-config", "--scenario", _write(tmp_path, {"entries": ["nope"]})]) == 2
    assert "config error" in capsys.readouterr().err


def test_malformed_json_exit_code_and_position(tmp_path, capsys):
    path = _write(tmp_path, '{\n  "entries": ["sphere2"],\n  "suites": [COR]\n}\n')
    assert main(["run", "--scenario", path, "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert "line 3, column 14" in err and "malformed JSON" in err
    assert not (tmp_path / "o").exists()


def test_bad_usage_exits_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["run", "--scenario", "full", "--span", "1"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2


def test_run_writes_report_manifest_and_trajectories(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "--scenario", _write(tmp_path, QUICK), "--out", str(out), "--seed", "5"]) == 0
    assert "COR" in capsys.readouterr().out
    report = json.loads((out / "report.json").read_text())
    manifest = json.loads((out / "manifest.json").read_text())
    assert report["summary"]["consistent"] is True
    assert report["settings"]["seed"] == 5
    assert "dir" not in report["config"].get("output", {})
    assert manifest["backend"] in ("numba", "numpy") and manifest["threads"] == 1
    csvs = sorted(os.listdir(out / "trajectories"))
    assert csvs and all(f.endswith(".csv") for f in csvs)
    listed = {f["path"] for f in manifest["files"]}
    assert "report.json" in listed and all("trajectories/" + f in listed for f in csvs)


def test_inconsistent_verdict_exits_1(tmp_path):
    # an absurd umbilicity threshold calls the cylinder umbilic while its geodesics stay helices
    bad = dict(QUICK, entries=["cylinder"], suites=["COR"], thresholds={"umbilic": 10})
    assert main(["run", "--scenario", _write(tmp_path, bad), "--out", str(tmp_path / "o")]) == 1
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["summary"]["verdicts"] == {"COR": False}


def test_thread_count_does_not_change_report(tmp_path, monkeypatch):
    path = _write(tmp_path, QUICK)
    assert main(["run", "--scenario", path, "--out", str(tmp_path / "a"), "--threads", "1"]) == 0
    monkeypatch.setenv(THREADS_ENV, "3")
    assert main(["run", "--scenario", path, "--out", str(tmp_path / "b")]) == 0
    assert json.loads((tmp_path / "b" / "manifest.json").read_text())["threads"] == 3
    assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()


def test_resolve_threads_precedence(monkeypatch):
    monkeypatch.delenv(THREADS_ENV, raising=False)
    assert resolve_threads(None, None) == 1
    assert resolve_threads(None, 4) == 4
    monkeypatch.setenv(THREADS_ENV, "2")
    assert resolve_threads(None, 4) == 2
    assert resolve_threads(6, 4) == 6
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(ConfigInvalid, match=THREADS_ENV):
        resolve_threads(None, None)
    with pytest.raises(ConfigInvalid, match="--threads"):
        resolve_threads(0, None)


def test_bad_thread_env_is_config_error(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(THREADS_ENV, "-1")
    assert main(["run", "--scenario", _write(tmp_path, QUICK), "--out", str(tmp_path / "o")]) == 2
    assert THREADS_ENV in capsys.readouterr().err


def test_convergence_without_studies_is_config_error(tmp_path, capsys):
    assert main(["convergence", "--scenario", _write(tmp_path, QUICK), "--out", str(tmp_path / "o")]) == 2
    assert "no convergence studies" in capsys.readouterr().err


def test_convergence_verb(tmp_path, capsys):
    sc = {"name": "conv", "entries": ["plane", "sphere2"], "suites": [],
          "convergence": [{"entry": "plane", "kind": "geodesic", "steps": [0.04, 0.02, 0.01], "span": [0, 1]},
                          {"entry": "sphere2", "kind": "pseudo-geodesic", "c": 1.0, "steps": [0.08, 0.04, 0.02],
                           "span": [0, 1]}]}
    out = tmp_path / "o"
    assert main(["convergence", "--scenario", _write(tmp_path, sc), "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert [r["status"] for r in report["convergence"]] == ["floor", "ok"]
    assert "verdicts" not in report
    assert sorted(os.listdir(out / "convergence")) == ["00__plane__geodesic.csv",
                                                       "01__sphere2__pseudo-geodesic-c1.csv"]


def test_console_script_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "umbilic_lab.cli", "validate-config", "--scenario",
                        _write(tmp_path, "{]")], capture_output=True, text=True)
    assert r.returncode == 2
    assert "line 1, column 2" in r.stderr
