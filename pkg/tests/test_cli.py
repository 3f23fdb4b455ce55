"""Tests for the command-line harness."""
import json

import numpy as np
import pytest

from ripsharp import cli
from ripsharp.errors import SolverError


def write_sweep_config(path, **overrides):
    cfg = {
        "rho_min": 0.5,
        "rho_max": 1.5,
        "rho_steps": 3,
        "phi_min": 0.0,
        "phi_max": 90.0,
        "phi_steps": 3,
        "mode": "both",
    }
    cfg.update(overrides)
    path.write_text(json.dumps(cfg))
    return cfg


def test_sweep_csv_layout(tmp_path):
    cfg = tmp_path / "plan.json"
    out = tmp_path / "grid.csv"
    write_sweep_config(cfg)
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    raw = out.read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().splitlines()
    assert lines[0] == "rho,phi_deg,delta_exact,delta_lb,gap"
    assert len(lines) == 10
    # rho-major ordering
    rhos = [float(l.split(",")[0]) for l in lines[1:]]
    assert rhos == sorted(rhos)


def test_sweep_deterministic(tmp_path):
    cfg = tmp_path / "plan.json"
    write_sweep_config(cfg)
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(out_a)]) == 0
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()


def test_sweep_marks_degenerate_rows(tmp_path):
    cfg = tmp_path / "plan.json"
    out = tmp_path / "grid.csv"
    write_sweep_config(cfg)
    assert cli.main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    rows = {tuple(l.split(",")[:2]): l.split(",")[2:] for l in out.read_text().splitlines()[1:]}
    assert rows[("1", "0")] == ["nan", "nan", "nan"]
    # a regular row carries finite values
    vals = [float(v) for v in rows[("0.5", "90")]]
    assert all(np.isfinite(vals))
    assert abs(vals[0] - 0.625) <= 1e-6  # exact equals the closed form here
    assert abs(vals[2] - (vals[0] - vals[1])) <= 1e-9


def test_sweep_config_validation(tmp_path):
    cfg = tmp_path / "plan.json"
    write_sweep_config(cfg, rho_steps=1)
    assert cli.main(["sweep", "--config", str(cfg), "--out", "x.csv"]) == 1
    write_sweep_config(cfg, mode="sideways")
    assert cli.main(["sweep", "--config", str(cfg), "--out", "x.csv"]) == 1
    write_sweep_config(cfg, extra_field=3)
    assert cli.main(["sweep", "--config", str(cfg), "--out", "x.csv"]) == 1
    cfg.write_text("{not json")
    assert cli.main(["sweep", "--config", str(cfg), "--out", "x.csv"]) == 1


def test_ecdf_deterministic_and_prefix_stable(tmp_path):
    short = tmp_path / "short.csv"
    full = tmp_path / "full.csv"
    args = ["ecdf", "--n", "4", "--r", "1", "--seed", "7"]
    assert cli.main(args + ["--samples", "3", "--out", str(short)]) == 0
    assert cli.main(args + ["--samples", "5", "--out", str(full)]) == 0
    short_lines = short.read_text().splitlines()
    full_lines = full.read_text().splitlines()
    assert short_lines[0] == "sample_index,delta"
    assert len(short_lines) == 4 and len(full_lines) == 6
    # per-sample streams: the first three rows do not depend on the total
    assert short_lines[1:] == full_lines[1:4]
    deltas = [float(l.split(",")[1]) for l in full_lines[1:]]
    assert all(0.5 - 1e-6 <= d <= 1.0 for d in deltas)


def test_delta_subcommand_polar(capsys):
    assert cli.main(["delta", "--rho", "0.5", "--phi", "90"]) == 0
    first = capsys.readouterr().out.splitlines()[0]
    assert abs(float(first.split()[-1]) - 0.625) <= 1e-6


def test_delta_subcommand_files(tmp_path, capsys):
    x = tmp_path / "x.txt"
    z = tmp_path / "z.txt"
    np.savetxt(x, np.array([0.0, 1 / np.sqrt(2)]))
    np.savetxt(z, np.array([1.0, 0.0]))
    assert cli.main(["delta", "--x", str(x), "--z", str(z)]) == 0
    first = capsys.readouterr().out.splitlines()[0]
    assert abs(float(first.split()[-1]) - 0.5) <= 1e-3


def test_delta_subcommand_rejects_mixed_inputs(tmp_path):
    x = tmp_path / "x.txt"
    np.savetxt(x, np.array([1.0, 0.0]))
    assert cli.main(["delta", "--rho", "1.0", "--x", str(x)]) == 1
    assert cli.main(["delta"]) == 1


def test_lowerbound_subcommand(capsys):
    assert cli.main(["lowerbound", "--rho", "0.7071067811865476", "--phi", "90"]) == 0
    outp = capsys.readouterr().out
    assert "0.5" in outp
    assert "region" in outp


def test_counterexample_bundle_roundtrip(tmp_path, capsys):
    bundle = tmp_path / "bundle.json"
    assert cli.main(["counterexample", "--n", "3", "--out", str(bundle)]) == 0
    payload = json.loads(bundle.read_text())
    assert set(payload) == {"instance", "x", "verification"}
    assert payload["verification"]["ok"] is True
    capsys.readouterr()
    assert cli.main(["verify", "--instance", str(bundle)]) == 0
    outp = capsys.readouterr().out
    first = outp.splitlines()[0]
    assert first.startswith("RIP 0.500000, spurious second-order critical")
    assert "delta(x,z)=0.500" in first


def test_verify_global_minimum_branch(tmp_path, capsys):
    bundle = tmp_path / "bundle.json"
    assert cli.main(["counterexample", "--n", "3", "--out", str(bundle)]) == 0
    payload = json.loads(bundle.read_text())
    z = payload["instance"]["Z"]
    xfile = tmp_path / "x.txt"
    np.savetxt(xfile, np.asarray(z, dtype=float).reshape(-1))
    capsys.readouterr()
    assert cli.main(["verify", "--instance", str(bundle), "--x", str(xfile)]) == 0
    outp = capsys.readouterr().out
    assert "global minimum" in outp.splitlines()[0]


def test_verify_not_critical_branch(tmp_path, capsys):
    bundle = tmp_path / "bundle.json"
    assert cli.main(["counterexample", "--n", "3", "--out", str(bundle)]) == 0
    xfile = tmp_path / "x.txt"
    np.savetxt(xfile, np.array([0.3, -1.2, 0.8]))
    capsys.readouterr()
    assert cli.main(["verify", "--instance", str(bundle), "--x", str(xfile)]) == 0
    outp = capsys.readouterr().out
    assert "not critical" in outp.splitlines()[0]


def test_missing_files_exit_one(tmp_path):
    assert cli.main(["verify", "--instance", str(tmp_path / "absent.json")]) == 1
    assert cli.main(["sweep", "--config", str(tmp_path / "absent.json")]) == 1


def test_bad_flags_exit_one():
    for argv in (["delta", "--rho", "not-a-number", "--phi", "0"],
                 ["no-such-command"],
                 []):
        with pytest.raises(SystemExit) as exc:
            cli.main(argv)
        assert exc.value.code == 1


def test_solver_failure_exit_two(monkeypatch):
    def stalled(x, z, opts=None):
        raise SolverError("interior-point solve did not converge")

    monkeypatch.setattr(cli.lmi, "delta_exact", stalled)
    assert cli.main(["delta", "--rho", "0.5", "--phi", "90"]) == 2


def test_ecdf_validation():
    assert cli.main(["ecdf", "--n", "1", "--r", "2", "--samples", "1", "--out", "x.csv"]) == 1
    assert cli.main(["ecdf", "--n", "4", "--r", "1", "--samples", "0", "--out", "x.csv"]) == 1
