"""CLI subcommands, artifacts, manifest and the 0/1/2 exit-code contract."""

import json
import os

import numpy as np
import pytest

from plapd.cli import main


def run_cli(tmp_path, *argv):
    out = tmp_path / "run"
    code = main(list(argv) + ["--out-dir", str(out)])
    return code, out


def read_manifest(out):
    return json.loads((out / "manifest.json").read_text())


def test_eigen_subcommand(tmp_path, capsys):
    code, out = run_cli(tmp_path, "eigen", "--p", "2", "--h", "0.1")
    assert code == 0
    assert "lambda1" in capsys.readouterr().out
    man = read_manifest(out)
    assert man["checks"]["eigen_converged"]
    assert set(man["outputs"]) >= {"phi1.csv", "eigen.json"}
    eig = json.loads((out / "eigen.json").read_text())
    assert abs(eig["lambda1"] - 5.7832) / 5.7832 < 0.02
    # csv artifact parses
    rows = (out / "phi1.csv").read_text().strip().splitlines()
    assert rows[0] == "x,y,u"
    assert len(rows) > 100


def test_check_hypotheses_example(tmp_path, capsys):
    code, out = run_cli(tmp_path, "check-hypotheses",
                        "--f", "log-critical:alpha=3", "--p", "2", "--N", "3")
    assert code == 0
    rep = json.loads((out / "hypotheses.json").read_text())
    assert rep["h3pp"] == "holds"
    assert abs(rep["witnesses"]["h3pp_liminf"] - 0.5) < 0.05


def test_solve_end_to_end(tmp_path):
    code, out = run_cli(tmp_path, "solve", "--f", "power:q=3",
                        "--p", "2", "--domain", "disc", "--h", "0.1")
    assert code == 0
    man = read_manifest(out)
    assert man["checks"]["fixed_point_converged"]
    assert man["checks"]["pohozaev"]
    sol = (out / "solution.csv").read_text().strip().splitlines()
    u = np.array([float(r.split(",")[2]) for r in sol[1:]])
    assert u.max() == pytest.approx(3.574, rel=0.05)


def test_mesh_out_flag(tmp_path):
    mesh_file = tmp_path / "mesh.txt"
    code, out = run_cli(tmp_path, "solve", "--f", "power:q=3", "--h", "0.15",
                        "--mesh-out", str(mesh_file))
    assert mesh_file.exists()
    header = mesh_file.read_text().splitlines()[0].split()
    assert len(header) == 3


def test_oracle_radial_profile(tmp_path):
    code, out = run_cli(tmp_path, "oracle-radial", "--f", "power:q=3",
                        "--p", "2", "--N", "2", "--R", "1")
    assert code == 0
    rows = (out / "profile.csv").read_text().strip().splitlines()
    assert rows[0] == "r,u"
    u0 = float(rows[1].split(",")[1])
    assert u0 == pytest.approx(3.5739, rel=1e-3)


def test_oracle_radial_critical_obstruction(tmp_path):
    code, out = run_cli(tmp_path, "oracle-radial", "--f", "power:q=5",
                        "--p", "2", "--N", "3", "--R", "1")
    assert code == 1
    rep = json.loads((out / "oracle.json").read_text())
    assert rep["solved"] is False


def test_exist_lambda_sweep(tmp_path, capsys):
    code, out = run_cli(tmp_path, "exist", "--f", "power:q=3", "--h", "0.15",
                        "--lambda-sweep", "0.5:64:8")
    assert code == 0
    rep = json.loads((out / "lambda_max.json").read_text())
    lo, hi = rep["bracket"]
    assert 0 < lo < hi
    assert rep["lambda_hat"] is not None


def test_sweep_eigen_scaling(tmp_path):
    code, out = run_cli(tmp_path, "sweep", "--p", "2", "--N", "2",
                        "--r-min", "1", "--r-max", "2", "--n", "2")
    assert code == 0
    rows = json.loads((out / "eigen_sweep.json").read_text())
    assert rows[0]["scaled"] == pytest.approx(rows[1]["scaled"], rel=1e-8)


# ---------------------------------------------------------------------------
# exit-code contract

def test_empty_config_is_schema_error(tmp_path):
    cfg = tmp_path / "empty.toml"
    cfg.write_text("")
    code = main(["eigen", "--config", str(cfg),
                 "--out-dir", str(tmp_path / "r")])
    assert code == 2


def test_unknown_solver_key_is_schema_error(tmp_path):
    cfg = tmp_path / "bad.toml"
    cfg.write_text("[solver]\nbogus = 1\n")
    code = main(["eigen", "--config", str(cfg),
                 "--out-dir", str(tmp_path / "r")])
    assert code == 2


def test_unknown_nonlinearity_is_schema_error(tmp_path):
    code, _ = run_cli(tmp_path, "solve", "--f", "mystery:x=1", "--h", "0.2")
    assert code == 2


def test_fault_injection_max_iter_one(tmp_path):
    """[solver] max_iter = 1 forces non-convergence: exit 1, reports still
    written."""
    cfg = tmp_path / "cfg.toml"
    cfg.write_text("[solver]\nmax_iter = 1\n")
    out = tmp_path / "r"
    code = main(["eigen", "--h", "0.15", "--config", str(cfg),
                 "--out-dir", str(out)])
    assert code == 1
    assert (out / "eigen.json").exists()
    assert (out / "manifest.json").exists()
    assert not read_manifest(out)["checks"]["eigen_converged"]


def test_manifest_records_config_and_versions(tmp_path):
    code, out = run_cli(tmp_path, "eigen", "--p", "2", "--h", "0.15")
    man = read_manifest(out)
    assert man["command"] == "eigen"
    assert man["config"]["p"] == 2.0
    assert "numpy" in man["versions"]
    assert man["wall_clock"] > 0
    for name in man["outputs"]:
        assert (out / name).exists()
