import json
import subprocess
import sys

import pytest

from mixlab.cli import main
from mixlab.network import load_network, save_network

from conftest import edge_net


def _run(*argv):
    return main([str(a) for a in argv])


def test_build_double_path(tmp_path, capsys):
    out = tmp_path / "ex.json"
    assert _run("build", "example33", "--n", 20, "--out", out) == 0
    net = load_network(out)
    assert net.n_vertices == 41
    meta = json.loads((tmp_path / "ex.meta.json").read_text())
    assert meta["config"]["params"] == {"n": 20}
    assert net.metadata["config_hash"] == meta["config_hash"]
    assert "41 vertices" in capsys.readouterr().out


def test_build_decorated_tree_has_d_labels(tmp_path):
    out = tmp_path / "t.json"
    assert _run("build", "theorem2a", "--depth", 10, "--torus", 2, "--out", out) == 0
    net = load_network(out)
    assert net.vertices_with_label("D0") == ["o"]
    assert net.metadata["depth"] == 10


def test_build_variant_one_matches_part_a(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    _run("build", "theorem2a", "--depth", 6, "--out", a)
    _run("build", "theorem2b1", "--depth", 6, "--out", b)
    da, db = json.loads(a.read_text()), json.loads(b.read_text())
    assert da["vertices"] == db["vertices"] and da["edges"] == db["edges"]
    assert db["metadata"]["family"] == "theorem2b1"


def test_build_pair_writes_two_networks(tmp_path):
    out = tmp_path / "pair.json"
    assert _run("build", "theorem2c", "--depth", 4, "--out", out) == 0
    s = load_network(tmp_path / "pair.stretched.json")
    l = load_network(tmp_path / "pair.lumped.json")
    assert l.n_vertices < s.n_vertices
    assert (tmp_path / "pair.lumped.meta.json").exists()


def test_build_rejection_names_constraint(tmp_path, capsys):
    rc = _run("build", "theorem1", "--n", 32, "--delta", 0.5, "--s", 2, "--out", tmp_path / "x.json")
    assert rc == 2
    assert "delta <= 1/8" in capsys.readouterr().err


def test_build_unknown_parameter(tmp_path, capsys):
    rc = _run("build", "example33", "--set", "depth=3", "--out", tmp_path / "x.json")
    assert rc == 2 and "no parameter 'depth'" in capsys.readouterr().err


def test_flags_override_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"params": {"n": 5}}))
    out = tmp_path / "ex.json"
    _run("build", "example33", "--config", cfg, "--out", out)
    assert load_network(out).n_vertices == 11
    _run("build", "example33", "--config", cfg, "--n", 7, "--out", out)
    assert load_network(out).n_vertices == 15


def test_build_is_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    _run("build", "theorem2b2", "--block", 3, "--m", 1, "--r", 2, "--out", a)
    _run("build", "theorem2b2", "--block", 3, "--m", 1, "--r", 2, "--out", b)
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.meta.json").read_bytes() == (tmp_path / "b.meta.json").read_bytes()


@pytest.fixture
def two_state_file(tmp_path):
    path = tmp_path / "two.json"
    save_network(edge_net([("u", "v", 1.0)]), path)
    return path


def _csv_values(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    assert lines[0] == "t,value"
    return [float(l.split(",")[1]) for l in lines[1:]]


def test_profile_two_state(two_state_file, tmp_path):
    out = tmp_path / "p.csv"
    assert _run("profile", two_state_file, "--kind", "tv", "--t-max", 5, "--out", out) == 0
    text = out.read_text()
    assert text.startswith("# config_hash=")
    assert _csv_values(text) == [0.5, 0, 0, 0, 0, 0]
    out2 = tmp_path / "p2.csv"
    _run("profile", two_state_file, "--kind", "tv", "--t-max", 5, "--out", out2)
    assert out.read_bytes() == out2.read_bytes()


def test_profile_separation_and_continuous(two_state_file, capsys):
    assert _run("profile", two_state_file, "--kind", "sep", "--t-max", 3) == 0
    assert _csv_values(capsys.readouterr().out)[0] == 1.0
    assert _run("profile", two_state_file, "--holding", 0, "--grid", "0,0.5,1") == 0
    vals = _csv_values(capsys.readouterr().out)
    assert vals[0] == 0.5 and vals[2] < vals[1] < vals[0]


def test_profile_config_file_and_flags(two_state_file, tmp_path, capsys):
    cfg = tmp_path / "p.json"
    cfg.write_text(json.dumps({"kind": "sep", "t_max": 2}))
    _run("profile", two_state_file, "--config", cfg)
    assert len(_csv_values(capsys.readouterr().out)) == 3
    _run("profile", two_state_file, "--config", cfg, "--t-max", 4, "--kind", "tv")
    assert _csv_values(capsys.readouterr().out) == [0.5, 0, 0, 0, 0]


def test_profile_bad_start_is_usage_error(two_state_file, capsys):
    assert _run("profile", two_state_file, "--starts", "nope") == 2
    assert "nope" in capsys.readouterr().err


def test_experiment_outputs(tmp_path, capsys):
    out = tmp_path / "rep"
    assert _run("experiment", "local-clt", "--out", out) == 0
    report = json.loads((out / "local-clt.json").read_text())
    assert report["status"] == "PASS" and len(report["config_hash"]) == 16
    csvs = sorted(out.glob("*.csv"))
    assert csvs and all(p.read_text().startswith(f"# config_hash={report['config_hash']}") for p in csvs)
    assert "PASS local-clt" in capsys.readouterr().out
    again = tmp_path / "rep2"
    _run("experiment", "local-clt", "--out", again)
    for p in [out / "local-clt.json", *csvs]:
        assert p.read_bytes() == (again / p.name).read_bytes()


def test_experiment_override_changes_hash(tmp_path):
    _run("experiment", "local-clt", "--out", tmp_path / "a")
    _run("experiment", "local-clt", "--set", "ns=[100]", "--out", tmp_path / "b")
    a = json.loads((tmp_path / "a" / "local-clt.json").read_text())
    b = json.loads((tmp_path / "b" / "local-clt.json").read_text())
    assert a["config_hash"] != b["config_hash"] and b["config"]["ns"] == [100]


def test_experiment_failure_exit_code(capsys):
    # a bracket constant of 1 makes the local limit check fail
    assert _run("experiment", "local-clt", "--set", "C=1") == 1
    assert "FAIL" in capsys.readouterr().out


def test_unknown_experiment_lists_names(capsys):
    assert _run("experiment", "nope") == 2
    err = capsys.readouterr().err
    assert "lemma32" in err and "psi-rate" in err
    assert _run("experiment", "list") == 0
    assert "thm3-profile" in capsys.readouterr().out


def test_unknown_experiment_parameter(capsys):
    assert _run("experiment", "local-clt", "--set", "bogus=1") == 2
    assert "bogus" in capsys.readouterr().err


def test_console_script_and_log(tmp_path):
    log = tmp_path / "run.log"
    out = tmp_path / "ex.json"
    proc = subprocess.run([sys.executable, "-m", "mixlab.cli", "--log", str(log), "build", "example33",
                           "--n", "3", "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "config_hash=" in log.read_text()
    proc = subprocess.run([sys.executable, "-m", "mixlab.cli", "build"], capture_output=True, text=True)
    assert proc.returncode == 2
