import json
import subprocess
import sys

import numpy as np
import pytest

from symrfm import cli, harness, io
from symrfm.partitions import load_partition

SMALL = """
name = "small"
[defaults]
kernel = { iterations = 3 }
n_seeds = 2
master_seed = 10

[[experiment]]
name = "moves"
task = { operation = "add", moduli = [7] }
partition = { family = "fixed-points", reflection = "s" }
move = { kind = "random", counts = [0, 2] }
alignment = ["reflection:s"]

[[experiment]]
name = "orbit"
task = { operation = "sub", moduli = [7] }
partition = { family = "random", fraction = 0.5 }
m0 = "pi-sum:id,sr^2"
orbit = "reflection:sr^2"
kernel = { kind = "quadratic" }
"""


def test_parse_config():
    cfg = harness.parse_config(SMALL)
    a, b = cfg["experiments"]
    assert a.seeds == (10, 11) and a.kernel.iterations == 3
    assert b.kernel.kind == "quadratic" and b.kernel.iterations == 3
    assert a.config_hash != b.config_hash
    specs = harness.expand(a, "out")
    # the unmoved partition has no randomness, so it runs once
    assert [(s.label, s.seed) for s in specs] == [("random=0", 10), ("random=2", 10), ("random=2", 11)]


@pytest.mark.parametrize("bad", [
    'name="x"\n[[experiment]]\nname="a"\ntask={operation="add",moduli=[7]}\npartition={family="random"}\nseeds=[]',
    'name="x"\n[[experiment]]\nname="a"\ntask={operation="add",moduli=[7]}\npartition={family="nope"}',
    'name="x"\n[[experiment]]\nname="a"\ntask={operation="add",moduli=[7]}\npartition={family="random"}\nkernel={kind="x"}',
    'name="x"\n[[experiment]]\nname="a"\ntask={operation="add"}\npartition={family="random"}',
    'name="x"',
    'not toml [',
])
def test_config_errors(bad):
    with pytest.raises(harness.ConfigError):
        harness.parse_config(bad)


def test_validation_catches_bad_parameters():
    text = SMALL.replace('counts = [0, 2]', 'counts = [0, 9999]')
    exp = harness.parse_config(text)["experiments"][0]
    with pytest.raises(harness.ConfigError):
        exp.validate()
    exp = harness.parse_config(SMALL.replace("pi-sum:id,sr^2", "magic"))["experiments"][1]
    with pytest.raises(harness.ConfigError):
        exp.validate()


def test_all_presets_validate():
    for name in harness.PRESETS + ("calibration",):
        cfg = harness.load_preset(name)
        for exp in cfg["experiments"]:
            if exp.m0.startswith("learned:"):
                exp = harness.override(exp)  # learned matrices are only checked syntactically
            exp.validate()
    with pytest.raises(harness.ConfigError):
        harness.load_preset("table9")


def test_pi_sum_matrix():
    from symrfm.tasks import Task
    M = harness.pi_sum_matrix(Task.modular("add", 5), ["id", "sr^2"])
    np.testing.assert_allclose(M, M.T)
    assert np.linalg.eigvalsh(M)[-1] == pytest.approx(1.0)


def test_run_experiments_end_to_end(tmp_path):
    cfg = harness.parse_config(SMALL)
    rows = harness.run_experiments(cfg["experiments"], tmp_path)
    assert all(r["status"] == "ok" for r in rows)
    table = io.read_results(tmp_path / "results.csv")
    assert len(table) == 3 + 2
    for r in table:
        for art in json.loads(r["artifacts"]):
            assert (tmp_path / art).exists() or __import__("pathlib").Path(art).exists()
    orbit_rows = [r for r in table if r["experiment"] == "orbit"]
    assert all(r["orbit_precision"] != "" for r in orbit_rows)
    assert json.loads(table[0]["alignment"])["reflection:s"]["support_mass_fraction"] > 0
    assert (tmp_path / "summary.csv").exists()
    assert (tmp_path / "moves" / "random-2" / "curve.csv").exists()
    # rerun: identical partitions and metrics, rows appended
    rows2 = harness.run_experiments(cfg["experiments"], tmp_path)
    key = lambda r: (r["experiment"], r["label"], r["seed"])
    for a, b in zip(sorted(rows, key=key), sorted(rows2, key=key)):
        assert a["test_accuracy"] == b["test_accuracy"]
        assert a["partition"] == b["partition"]
    assert len(io.read_results(tmp_path / "results.csv")) == 10


def test_failed_runs_are_flagged(tmp_path):
    cfg = harness.parse_config(SMALL)
    exp = cfg["experiments"][0]
    spec = harness.expand(exp, tmp_path)[0]
    bad = harness.RunSpec(exp, spec.label, spec.count, spec.seed, spec.outdir, M0=np.eye(3))
    row = harness.execute(bad)
    assert row["status"] == "failed" and "M0" in row["error"]


def test_worker_pool(tmp_path):
    cfg = harness.parse_config(SMALL)
    rows = harness.run_experiments(cfg["experiments"][:1], tmp_path, workers=2)
    assert len(rows) == 3 and all(r["status"] == "ok" for r in rows)


# --- CLI ---------------------------------------------------------------------


def run_cli(*args, env_root=None, monkeypatch=None):
    return cli.main(list(args))


def test_cli_pipeline(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv(harness.OUTPUT_ROOT_ENV, str(tmp_path / "root"))
    assert cli.main(["gen-task", "--op", "add", "--moduli", "5"]) == 0
    assert (tmp_path / "root" / "add-5.csv").read_text().splitlines()[7] == "6,1,1,2"
    part = tmp_path / "p.json"
    assert cli.main(["make-partition", "--op", "add", "--moduli", "7", "--family", "fixed-points",
                     "--reflection", "s", "--out", str(part)]) == 0
    task, p = load_partition(part)
    assert len(p.test) == 7
    assert cli.main(["run-rfm", "--partition", str(part), "--iterations", "3"]) == 0
    out = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert out["train_accuracy"] == 1.0
    mat = tmp_path / "root" / "run-rfm" / "add-7-gaussian" / "M.mat"
    assert cli.main(["analyze", "--matrix", str(mat), "--op", "add", "--moduli", "7",
                     "--subgroup", "reflection:s", "--heatmap", str(tmp_path / "h.png")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert 0 < report["reflection:s"]["support_mass_fraction"] <= 1
    assert cli.main(["orbit-check", "--op", "add", "--moduli", "7", "--subgroup", "reflection:s",
                     "--m0", "pi-sum:id,s", "--iterations", "2"]) == 0
    assert "precision" in capsys.readouterr().out


def test_cli_run_config(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text(SMALL)
    assert cli.main(["run", "--config", str(cfg), "--output", str(tmp_path), "--only", "orbit"]) == 0
    assert (tmp_path / "small" / "results.csv").exists()


def test_cli_errors(tmp_path, capsys):
    assert cli.main(["reproduce", "table9"]) == 1
    err = capsys.readouterr().err.strip()
    assert err.startswith("error: config: unknown preset")
    assert cli.main(["make-partition", "--op", "add", "--moduli", "7", "--reflection", "q^2",
                     "--out", str(tmp_path / "x.json")]) == 1
    assert capsys.readouterr().err.startswith("error: group:")
    assert cli.main(["run", "--config", str(tmp_path / "missing.toml")]) == 1
    assert capsys.readouterr().err.startswith("error: config:")


def test_console_script_exit_code():
    proc = subprocess.run([sys.executable, "-m", "symrfm.cli", "reproduce", "nope"],
                          capture_output=True, text=True)
    assert proc.returncode == 1
    assert proc.stderr.strip().splitlines()[-1].startswith("error: config:")
