import csv
import json
import shutil
import subprocess
import sys

import numpy as np
import pytest
import yaml

from weaksync import cli
from weaksync.io import load_scenario


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def write_scenario(tmp_path, name="run", **overrides):
    doc = {
        "name": name,
        "graph": "g.txt",
        "model": {"A": [[0.0]], "B": [[1.0]]},
        "initial": {"x0": [[1.0], [-1.0]]},
        "time": {"t_final": 20.0, "sample_interval": 0.1},
    }
    for key, value in overrides.items():
        doc[key] = value
    (tmp_path / "g.txt").write_text("2\n0 1 1.0\n1 0 1.0\n")
    path = tmp_path / f"{name}.yaml"
    path.write_text(yaml.safe_dump(doc))
    return path


# --- analyze ---------------------------------------------------------------------


def test_analyze_six_bicomponents(capsys, scenarios_dir):
    code, out, _ = run(capsys, "analyze", str(scenarios_dir / "graphs" / "six_bicomponents.txt"), "--json")
    assert code == 0
    rep = json.loads(out)
    assert rep["bicomponent_count"] == 6
    assert rep["basic_count"] == 3
    assert rep["spanning_tree"] is False
    rows = np.array(rep["beta"]["values"])
    np.testing.assert_allclose(rows.sum(axis=1), 1.0)


def test_analyze_large_broken_links(capsys, scenarios_dir):
    code, out, _ = run(capsys, "analyze", str(scenarios_dir / "graphs" / "large_broken_links.txt"), "--json")
    assert code == 0
    rep = json.loads(out)
    basic = sorted(c["size"] for c in rep["bicomponents"] if c["basic"])
    nonbasic = sorted(c["size"] for c in rep["bicomponents"] if not c["basic"])
    assert basic == [4, 8, 30]
    assert nonbasic == [6, 10, 10]


def test_analyze_single_node_text(capsys, tmp_path):
    g = tmp_path / "one.txt"
    g.write_text("1\n")
    code, out, _ = run(capsys, "analyze", str(g))
    assert code == 0
    assert "bicomponents: 1  basic: 1" in out
    assert "directed spanning tree: yes" in out


def test_analyze_beta_text(capsys, tmp_path):
    g = tmp_path / "sink.txt"
    g.write_text("3\n0 2 1\n1 2 3\n")
    code, out, _ = run(capsys, "analyze", str(g))
    assert code == 0
    assert "0.250000 0.750000" in out
    assert "-0.000000" not in out


def test_analyze_parse_error_has_location(capsys, tmp_path):
    g = tmp_path / "bad.txt"
    g.write_text("3\n0 1 1\n1 1 2\n")
    code, _, err = run(capsys, "analyze", str(g))
    assert code == 1
    assert f"{g}:3:" in err


def test_analyze_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "analyze", str(tmp_path / "nope.txt"))
    assert code == 1
    assert "nope.txt" in err


# --- gain ---------------------------------------------------------------------------


def test_gain_triple_integrator(capsys, scenarios_dir, tmp_path):
    out_file = tmp_path / "gain.json"
    code, out, _ = run(
        capsys, "gain", "--A", str(scenarios_dir / "models" / "triple_A.txt"),
        "--B", str(scenarios_dir / "models" / "triple_B.txt"), "--out", str(out_file),
    )
    assert code == 0
    assert "2.4142" in out and "4.8284" in out
    doc = json.loads(out_file.read_text())
    printed = np.array([[2.41, 2.41, 1.0], [2.41, 4.82, 2.41], [1.0, 2.41, 2.41]])
    assert np.max(np.abs(np.array(doc["P"]) - printed)) <= 0.01
    assert np.round(doc["K"], 2).tolist() == [[1.0, 2.41, 2.41]]
    assert doc["residual_norm"] <= 3e-9


def test_gain_scalar(capsys, tmp_path):
    (tmp_path / "A.txt").write_text("0\n")
    (tmp_path / "B.txt").write_text("1\n")
    code, _, _ = run(capsys, "gain", "--A", str(tmp_path / "A.txt"), "--B", str(tmp_path / "B.txt"),
                     "--out", str(tmp_path / "g.json"))
    assert code == 0
    assert json.loads((tmp_path / "g.json").read_text())["P"] == [[pytest.approx(1.0)]]


def test_gain_unstabilizable(capsys, scenarios_dir, tmp_path):
    code, _, err = run(
        capsys, "gain", "--A", str(scenarios_dir / "models" / "unstabilizable_A.txt"),
        "--B", str(scenarios_dir / "models" / "unstabilizable_B.txt"), "--out", str(tmp_path / "g.json"),
    )
    assert code == 1
    assert "lambda = 1" in err
    assert not (tmp_path / "g.json").exists()


def test_gain_bad_matrix(capsys, tmp_path):
    (tmp_path / "A.txt").write_text("1 2\n3\n")
    (tmp_path / "B.txt").write_text("1\n1\n")
    code, _, err = run(capsys, "gain", "--A", str(tmp_path / "A.txt"), "--B", str(tmp_path / "B.txt"), "--out", "")
    assert code == 1
    assert "differing lengths" in err


# --- simulate --------------------------------------------------------------------------


def test_simulate_writes_csv_and_manifest(capsys, tmp_path):
    path = write_scenario(tmp_path)
    out_dir = tmp_path / "out"
    code, out, _ = run(capsys, "simulate", str(path), "--out", str(out_dir), "--svg")
    assert code == 0
    assert "network_stable=True" in out
    manifest = json.loads((out_dir / "run.manifest.json").read_text())
    assert manifest["status"] == "ok"
    assert manifest["summary"]["global_sync"] is True
    assert manifest["config"]["initial"]["rho0"] == [0.0, 0.0]
    assert manifest["config"]["integrator"]["max_step"] == 0.1
    assert manifest["config"]["analysis"]["window"] == 0.1
    assert manifest["sync_report"]["sync_implies_stability"] is True
    assert set(manifest["outputs"]) == {str(out_dir / "run.csv"), str(out_dir / "run.svg")}
    assert manifest["integrator"]["steps"] > 0
    with open(out_dir / "run.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x[0.0]", "x[1.0]", "zeta_norm[0]", "zeta_norm[1]", "rho[0]", "rho[1]"]
    assert len(rows) == 202
    assert (out_dir / "run.svg").read_text().startswith("<svg")


def test_simulate_manifest_reproduces_run(capsys, tmp_path):
    path = write_scenario(tmp_path, initial={"seed": 17})
    run(capsys, "simulate", str(path), "--out", str(tmp_path / "a"))
    run(capsys, "simulate", str(path), "--out", str(tmp_path / "b"))
    ma = json.loads((tmp_path / "a" / "run.manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "run.manifest.json").read_text())
    assert ma["seed"] == 17
    assert list(ma["outputs"].values()) == list(mb["outputs"].values())
    assert ma["inputs"] == mb["inputs"]
    assert ma["config"] == mb["config"]
    # a random seed is drawn when none is given and recorded so the run can be repeated
    path2 = write_scenario(tmp_path, name="free", initial={})
    run(capsys, "simulate", str(path2), "--out", str(tmp_path / "c"))
    mc = json.loads((tmp_path / "c" / "free.manifest.json").read_text())
    assert isinstance(mc["seed"], int)
    assert load_scenario(path2).config.seed is not None
    path3 = write_scenario(tmp_path, name="again", initial={"seed": mc["seed"]})
    run(capsys, "simulate", str(path3), "--out", str(tmp_path / "c"))
    md = json.loads((tmp_path / "c" / "again.manifest.json").read_text())
    assert list(md["outputs"].values()) == list(mc["outputs"].values())


def test_simulate_zero_horizon_is_input_error(capsys, tmp_path):
    path = write_scenario(tmp_path, time={"t_final": 0.0})
    code, _, err = run(capsys, "simulate", str(path), "--out", str(tmp_path / "out"))
    assert code == 1
    assert "t_final" in err


def test_simulate_integration_failure(capsys, tmp_path):
    path = write_scenario(tmp_path, model={"A": [[500.0]], "B": [[1.0]]}, initial={"x0": [[1.0], [1.0]]})
    code, _, err = run(capsys, "simulate", str(path), "--out", str(tmp_path / "out"))
    assert code == 2
    assert "non-finite" in err
    manifest = json.loads((tmp_path / "out" / "run.manifest.json").read_text())
    assert manifest["status"] == "failed"
    assert manifest["failure"]["type"] == "NonFiniteStateError"
    assert 0 < manifest["failure"]["t"] <= 20.0


def test_simulate_strict_flags_unfinished_run(capsys, tmp_path):
    path = write_scenario(tmp_path, time={"t_final": 0.5, "sample_interval": 0.1})
    code, _, _ = run(capsys, "simulate", str(path), "--out", str(tmp_path / "out"))
    assert code == 0
    code, _, _ = run(capsys, "simulate", str(path), "--out", str(tmp_path / "out"), "--strict")
    assert code == 3


def test_simulate_unstabilizable_model(capsys, tmp_path):
    path = write_scenario(tmp_path, model={"A": [[1.0, 0.0], [0.0, 1.0]], "B": [[1.0], [0.0]]}, initial={"seed": 1})
    code, _, err = run(capsys, "simulate", str(path), "--out", str(tmp_path / "out"))
    assert code == 1
    assert "stabilizable" in err


@pytest.mark.parametrize(
    "overrides, fragment",
    [
        ({"graph": "missing.txt"}, "graph file not found"),
        ({"model": {"A": [[0.0]]}}, "model needs both"),
        ({"time": {}}, "t_final"),
        ({"analysis": {"bogus": 1}}, "unknown analysis keys"),
        ({"integrator": {"rtol": "tight"}}, "integrator.rtol"),
    ],
)
def test_simulate_config_errors(capsys, tmp_path, overrides, fragment):
    path = write_scenario(tmp_path, **overrides)
    code, _, err = run(capsys, "simulate", str(path), "--out", str(tmp_path / "out"))
    assert code == 1
    assert fragment in err


def test_simulate_batch_directory(capsys, tmp_path, monkeypatch):
    batch = tmp_path / "batch"
    batch.mkdir()
    for i in range(3):
        write_scenario(batch, name=f"s{i}", initial={"seed": i})
    monkeypatch.setenv("WEAKSYNC_THREADS", "2")
    code, out, _ = run(capsys, "simulate", str(batch), "--out", str(tmp_path / "out"))
    assert code == 0
    assert sorted(p.name for p in (tmp_path / "out").glob("*.manifest.json")) == [
        "s0.manifest.json", "s1.manifest.json", "s2.manifest.json"
    ]
    serial = tmp_path / "serial"
    monkeypatch.setenv("WEAKSYNC_THREADS", "1")
    run(capsys, "simulate", str(batch), "--out", str(serial))
    for i in range(3):
        a = json.loads((tmp_path / "out" / f"s{i}.manifest.json").read_text())
        b = json.loads((serial / f"s{i}.manifest.json").read_text())
        assert list(a["outputs"].values()) == list(b["outputs"].values())


def test_simulate_bad_thread_cap(capsys, tmp_path, monkeypatch):
    path = write_scenario(tmp_path)
    monkeypatch.setenv("WEAKSYNC_THREADS", "many")
    code, _, err = run(capsys, "simulate", str(path), "--out", str(tmp_path / "out"))
    assert code == 1
    assert "WEAKSYNC_THREADS" in err


def test_simulate_empty_directory(capsys, tmp_path):
    (tmp_path / "empty").mkdir()
    code, _, _ = run(capsys, "simulate", str(tmp_path / "empty"))
    assert code == 1


def test_shipped_sixteen_node_scenario(capsys, scenarios_dir, tmp_path):
    code, _, _ = run(capsys, "simulate", str(scenarios_dir / "sixteen_weak.yaml"), "--out", str(tmp_path))
    assert code == 0
    m = json.loads((tmp_path / "sixteen_weak.manifest.json").read_text())["summary"]
    assert m["network_stable"] and not m["global_sync"]
    assert all(m["basic_bicomponents_sync"])


# --- verify -----------------------------------------------------------------------------


def test_verify_three_cycle(capsys, tmp_path):
    g = tmp_path / "cycle.txt"
    g.write_text("3\n0 1 1\n1 2 1\n2 0 1\n")
    code, out, _ = run(capsys, "verify", str(g), "--q-trials", "50")
    assert code == 0
    rep = json.loads(out)
    assert rep["violations"] == 0
    assert rep["min_gamma"] == pytest.approx(1.0 / 3.0)


def test_verify_random(capsys):
    code, out, _ = run(capsys, "verify", "--random", "6", "100", "42")
    assert code == 0
    rep = json.loads(out)
    assert rep["graphs_checked"] == 100
    assert rep["violations"] == 0
    assert rep["q_rho"]["trials"] == 500


def test_verify_is_deterministic(capsys):
    _, a, _ = run(capsys, "verify", "--random", "5", "10", "7", "--q-trials", "20")
    _, b, _ = run(capsys, "verify", "--random", "5", "10", "7", "--q-trials", "20")
    assert a == b


def test_verify_condenses_non_strong_graph(capsys, scenarios_dir):
    code, out, _ = run(capsys, "verify", str(scenarios_dir / "graphs" / "six_bicomponents.txt"), "--q-trials", "10")
    assert code == 0
    rep = json.loads(out)
    assert len(rep["cases"]) == 3


def test_verify_empty_graph_file(capsys, tmp_path):
    g = tmp_path / "empty.txt"
    g.write_text("")
    code, _, err = run(capsys, "verify", str(g))
    assert code == 1
    assert "empty.txt" in err


def test_verify_bad_random_args(capsys):
    code, _, _ = run(capsys, "verify", "--random", "1", "5", "0")
    assert code == 1


# --- entry point ----------------------------------------------------------------------


def test_console_script(tmp_path):
    exe = shutil.which("weaksync")
    cmd = [exe] if exe else [sys.executable, "-m", "weaksync.cli"]
    g = tmp_path / "g.txt"
    g.write_text("2\n0 1 1\n")
    proc = subprocess.run([*cmd, "analyze", str(g)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "basic: 1" in proc.stdout
    proc = subprocess.run([*cmd, "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and "weaksync" in proc.stdout
