"""CLI contract: artifacts, schemas, exit codes, reproducibility."""

import json
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from kssim import io
from kssim.ksctl import main


@pytest.fixture()
def runner():
    return CliRunner()


def run_ok(runner, args):
    res = runner.invoke(main, args, catch_exceptions=False)
    assert res.exit_code == 0, res.output
    return res


class TestProfileCommand:
    def test_writes_profile_csv(self, runner, tmp_path):
        run_ok(runner, ["--out", str(tmp_path), "profile", "--mu", "1",
                        "--eps", "0.02", "--n", "2000"])
        tag, meta, cols, rows = io.read_csv(tmp_path / "profile.csv")
        assert tag == "kssim-profile-v1"
        assert cols == ["r", "P", "dP", "lapP", "Q"]
        assert float(rows[0][4]) == 8.0  # Q(0)
        assert meta["residual"] <= 1e-11
        assert (tmp_path / "manifest.json").exists()

    def test_eps_zero_profile(self, runner, tmp_path):
        run_ok(runner, ["--out", str(tmp_path), "profile", "--mu", "1",
                        "--eps", "0", "--n", "2000"])
        _, meta, _, _ = io.read_csv(tmp_path / "profile.csv")
        assert meta["eps"] == 0.0

    def test_check_bounds_reports(self, runner, tmp_path):
        run_ok(runner, ["--out", str(tmp_path), "profile", "--mu", "1",
                        "--eps", "0.005", "--n", "2000", "--check-bounds"])
        rep = json.loads((tmp_path / "reports" / "sandwich.json").read_text())
        assert rep["passed"] is True

    def test_malformed_config_rejected(self, runner, tmp_path):
        bad = tmp_path / "cfg.json"
        bad.write_text("{not json")
        res = runner.invoke(main, ["--config", str(bad), "--out",
                                   str(tmp_path), "profile"])
        assert res.exit_code != 0
        assert "config" in res.output

    def test_invalid_params_nonzero_exit(self, runner, tmp_path):
        res = runner.invoke(main, ["--out", str(tmp_path), "profile",
                                   "--mu", "-1"])
        assert res.exit_code != 0


class TestSpectrumCommand:
    def test_spectra_csv_and_gaps(self, runner, tmp_path):
        run_ok(runner, ["--out", str(tmp_path), "spectrum", "--mu", "1",
                        "--eps", "0.02", "--modes", "0..1", "--n", "400"])
        tag, meta, cols, rows = io.read_csv(tmp_path / "spectra.csv")
        assert tag == "kssim-spectra-v1"
        assert cols == ["m", "re", "im"]
        meta2 = json.loads((tmp_path / "spectra_meta.json").read_text())
        assert set(meta2["modes"]) == {"0", "1"}
        for v in meta2["modes"].values():
            assert v["gap"] >= 0.9

    def test_config_file_with_flag_override(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"spectrum": {"modes": "0..0", "n": 300}}))
        run_ok(runner, ["--config", str(cfg), "--out", str(tmp_path),
                        "spectrum", "--modes", "1,2"])
        meta2 = json.loads((tmp_path / "spectra_meta.json").read_text())
        assert set(meta2["modes"]) == {"1", "2"}  # flag wins


class TestEvolveCommand:
    def test_trajectory_and_fit(self, runner, tmp_path):
        run_ok(runner, ["--out", str(tmp_path), "evolve", "--mu", "1",
                        "--eps", "0.02", "--amplitude", "1e-3",
                        "--t-end", "1.0", "--dt", "2e-3", "--grid-n", "64"])
        tag, meta, cols, rows = io.read_csv(tmp_path / "trajectory.csv")
        assert tag == "kssim-trajectory-v1"
        assert cols == ["t", "l2k_g", "h1k_g", "hdots_w", "hdot1_w",
                        "hdot2_w", "x_norm", "y_norm", "mass_g"]
        assert abs(float(rows[0][8])) <= 1e-10  # mass at t = 0
        fit = json.loads((tmp_path / "decay_fit.json").read_text())
        assert fit["stable"] is True

    def test_bit_reproducibility(self, runner, tmp_path):
        args = ["evolve", "--mu", "1", "--eps", "0.02", "--t-end", "0.5",
                "--dt", "2e-3", "--grid-n", "64", "--seed", "5"]
        run_ok(runner, ["--out", str(tmp_path / "a")] + args)
        run_ok(runner, ["--out", str(tmp_path / "b")] + args)
        for name in ("trajectory.csv", "decay_fit.json"):
            assert ((tmp_path / "a" / name).read_bytes()
                    == (tmp_path / "b" / name).read_bytes())


class TestCheckCommand:
    def test_selected_suite_writes_report(self, runner, tmp_path):
        run_ok(runner, ["--out", str(tmp_path), "check", "--suite",
                        "degenerate"])
        rep = json.loads((tmp_path / "reports" / "degenerate.json").read_text())
        assert rep["passed"] is True
        assert rep["name"] == "degenerate_zero"


class TestSweepCommand:
    def test_lattice_no_silent_gaps(self, runner, tmp_path, monkeypatch):
        monkeypatch.setenv("KSSIM_THREADS", "1")
        run_ok(runner, ["--out", str(tmp_path), "sweep", "--mu", "0.5,1",
                        "--eps", "0.01,0.02", "--modes", "0",
                        "--no-evolve"])
        tag, meta, cols, rows = io.read_csv(tmp_path / "sweep.csv")
        assert tag == "kssim-sweep-v1"
        assert len(rows) == 4
        status = cols.index("status")
        assert all(r[status] == "ok" for r in rows)
        mass = cols.index("mass")
        masses = [float(r[mass]) for r in rows]
        assert all(0 < m < 8 * np.pi for m in masses)
