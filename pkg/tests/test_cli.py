import json
import subprocess
import sys

import pytest
from filelock import FileLock

from esterle import cli
from esterle.reports import read_csv


def run(args, cwd):
    return subprocess.run([sys.executable, "-m", "esterle.cli", *args], cwd=cwd, capture_output=True, text=True)


def test_useq_smoke(tmp_path):
    res = run(["u-seq", "--set", "atoms", "--n-max", "25", "--out", "o"], tmp_path)
    assert res.returncode == 0, res.stderr
    header, rows = read_csv(tmp_path / "o" / "useq.csv")
    assert header == ["n", "t_n", "log_u_n", "u_n", "identity_residual"]
    assert len(rows) == 25


def test_n_max_zero_is_schema_error(tmp_path):
    res = run(["u-seq", "--n-max", "0", "--out", "o"], tmp_path)
    assert res.returncode == 2
    assert "n_max must be ≥ 1" in res.stderr


def test_bad_config_field(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"schema_version": 1, "set": {"variant": "atoms", "angles": [0]}, "bogus": 1}))
    assert cli.main(["u-seq", "--config", str(cfg)]) == 2
    cfg.write_text(json.dumps({"schema_version": 7, "set": {"variant": "atoms", "angles": [0]}}))
    assert cli.main(["u-seq", "--config", str(cfg)]) == 2


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["--version"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    assert "schema_version 1" in out and "root_rel_tol" in out


def test_flags_override_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"schema_version": 1, "set": {"variant": "atoms", "angles": [0]},
                               "n_max": 40, "output_dir": "a"}))
    assert cli.main(["u-seq", "--config", str(cfg), "--n-max", "7", "--out", "b"]) == 0
    assert len(read_csv(tmp_path / "b" / "useq.csv")[1]) == 7
    assert not (tmp_path / "a").exists()


def test_verification_failure_exit_1(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    rc = cli.main(["verify", "--set", "atoms", "--n-max", "5", "--slack", "1e-300", "--out", "v"])
    assert rc == 1
    err = capsys.readouterr().err
    assert "verification.json" in err and "verification.csv" in err
    assert json.loads((tmp_path / "v" / "verification.json").read_text())["success"] is False


def test_lock_held_by_other_run(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    (tmp_path / "o").mkdir()
    with FileLock(str(tmp_path / "o" / cli.LOCK_NAME)):
        assert cli.main(["u-seq", "--n-max", "3", "--out", "o"]) == 2


def test_omega_and_removability_from_saved_omega(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert cli.main(["omega", "--set", "atoms", "--out", "o"]) == 0
    header, rows = read_csv(tmp_path / "o" / "knots.csv")
    assert header == ["k", "t_k", "d_k"] and rows
    rc = cli.main(["removability", "--set", "atoms", "--function", '{"tag": "exp"}',
                   "--omega", "o/omega.json", "--etas", "0.1", "0.01", "0.001", "--out", "r"])
    assert rc == 0
    rep = json.loads((tmp_path / "r" / "removability.json").read_text())
    assert rep["verdict"] == "REMOVABLE"


def test_delta_subcommand(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert cli.main(["delta", "--set", "atoms", "--measure", "atom", "--n", "4", "--out", "d"]) == 0
    header, rows = read_csv(tmp_path / "d" / "delta.csv")
    assert header[:2] == ["n", "log_delta_n"] and len(rows) == 4


def test_all_is_byte_reproducible_with_figures(tmp_path):
    cfg = {
        "schema_version": 1,
        "set": {"variant": "cluster", "base": 0.0, "ratio": 0.5, "scale": 1.0},
        "n_max": 30,
        "grid": {"n_radii": 61, "n_coarse": 128},
        "removability": {"function": {"tag": "exp"}, "etas": [0.1, 0.01]},
        "output_dir": "out",
        "figures": True,
    }
    outs = []
    for name in ("one", "two"):
        d = tmp_path / name
        d.mkdir()
        (d / "c.json").write_text(json.dumps(cfg))
        res = run(["all", "--config", "c.json"], d)
        assert res.returncode in (0, 1), res.stderr
        outs.append({p.name: p.read_bytes() for p in sorted((d / "out").iterdir())})
    assert outs[0].keys() == outs[1].keys()
    assert any(k.endswith(".png") for k in outs[0])
    for k in outs[0]:
        assert outs[0][k] == outs[1][k], k
        assert str(tmp_path).encode() not in outs[0][k]
