import csv
import json

import pytest

from blowup_lab.cli import main

FLAT = "[model]\nN = 1\np = {p}\n[grid]\nnx = 32\n[similarity]\nds = 0.05\ns_max = 1\n" \
       "[outputs]\ndirectory = {out}\n"


@pytest.fixture
def out_root(tmp_path, monkeypatch):
    monkeypatch.setenv("BLOWUP_LAB_OUT", str(tmp_path / "root"))
    return tmp_path / "root"


def test_run_ok_uses_output_root(tmp_path, out_root):
    cfg = tmp_path / "flat.ini"
    cfg.write_text(FLAT.format(p=2, out="flat"))
    assert main(["run", str(cfg)]) == 0
    assert (out_root / "flat" / "summary.json").exists()


def test_run_config_error(tmp_path, out_root, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[model]\nN = 1\np = 0.5\n")
    assert main(["run", str(cfg)]) == 1
    assert "p > 1 required" in capsys.readouterr().err
    assert main(["run", str(tmp_path / "missing.ini")]) == 1


def test_run_no_blowup_exit_code(tmp_path, out_root):
    text = "[model]\nN = 1\np = 2\n[grid]\nnx = 32\n[ic]\nu1 = 0\n[solver]\nt_max = 0.3\n"
    cfg = tmp_path / "zero.ini"
    cfg.write_text(text)
    assert main(["run", str(cfg)]) == 3
    cfg.write_text(text + "[outputs]\nrequire_blowup = false\n")
    assert main(["run", str(cfg)]) == 0


def test_oracle_ode(capsys):
    assert main(["oracle", "ode", "--p", "2", "--T", "1", "--t", "0.9"]) == 0
    data = json.loads(capsys.readouterr().out)
    assert data["u_t_at_t"] == pytest.approx(10.0)
    assert data["theta_fixed_point"] == 1.0
    assert main(["oracle", "ode", "--p", "1", "--T", "1"]) == 1


def test_sweep_writes_table(tmp_path, out_root):
    d = tmp_path / "cfgs"
    d.mkdir()
    (d / "a.ini").write_text(FLAT.format(p=2, out="a"))
    (d / "b.ini").write_text("[model]\nN = 1\np = 1\n")
    assert main(["sweep", str(d), "--out", "sw"]) == 0
    rows = list(csv.DictReader(open(out_root / "sw" / "sweep.csv")))
    assert [r["status"] for r in rows] == ["ok", "failed"]


def test_empty_sweep(tmp_path, out_root):
    (tmp_path / "empty").mkdir()
    assert main(["sweep", str(tmp_path / "empty"), "--out", "sw"]) == 0
    assert (out_root / "sw" / "sweep.csv").read_text().startswith("name,status")


def test_check_convergence(tmp_path, out_root):
    cfg = tmp_path / "flat.ini"
    cfg.write_text(FLAT.format(p=2, out="conv").replace("s_max = 1", "s_max = 2"))
    assert main(["check", "convergence", str(cfg), "--levels", "2"]) == 0
    report = json.loads((out_root / "conv" / "convergence.json").read_text())
    assert len(report["levels"]) == 2
    assert report["levels"][1]["order_dissipation_residual"] > 1.5
