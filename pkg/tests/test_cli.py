import json
import subprocess
import sys

import numpy as np
import pytest

from open_schwinger import cli


def run_cli(args):
    return cli.main([str(a) for a in args])


def read_csv(path):
    lines = path.read_text().strip().split("\n")
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


class TestValidation:
    def test_figure_default_configs_validate(self):
        for fig, (kind, over) in cli.FIGURES.items():
            cfg = cli.resolve_config(kind, over)
            assert cli.validate(kind, cfg) == [], fig

    def test_dense_cap_violation_at_n6(self):
        cfg = cli.resolve_config("spectrum", overrides=[("params.n_sites", 6)])
        violations = cli.validate("spectrum", cfg)
        assert len(violations) == 1 and "dense" in violations[0]
        cfg["iterative"] = True
        assert cli.validate("spectrum", cfg) == []

    def test_negative_d0_rejected(self):
        cfg = cli.resolve_config("spectrum", overrides=[("env.D0", -1.0)])
        assert any("D0" in v for v in cli.validate("spectrum", cfg))

    def test_empty_grid_rejected(self):
        cfg = cli.resolve_config("phase-diagram", overrides=[("options.m_values", [])])
        assert any("m_values" in v for v in cli.validate("phase-diagram", cfg))

    def test_unknown_keys_rejected(self):
        cfg = cli.resolve_config("spectrum")
        cfg["params"]["n_site"] = 3
        assert any("n_site" in v for v in cli.validate("spectrum", cfg))

    def test_central_links_range(self):
        cfg = cli.resolve_config("phase-diagram",
                                 overrides=[("options.central_links", [4, 5, 11]),
                                            ("params.n_sites", 6)])
        assert any("central_links" in v for v in cli.validate("phase-diagram", cfg))

    def test_exit_codes(self, tmp_path):
        assert run_cli(["spectrum", "--set", "env.D0=-2", "--out", tmp_path]) == 2
        assert run_cli(["unknown-kind", "--out", tmp_path]) == 2


class TestSpectrumRun:
    def test_fig3_defaults_emit_three_files(self, tmp_path):
        # full Fig. 3 parameters but on the N=2 lattice to keep the test quick
        code = run_cli(["fig3", "--set", "params.n_sites=2", "--out", tmp_path])
        assert code == 0
        names = {p.name for p in tmp_path.iterdir()}
        assert {"spectrum_delta.csv", "spectrum_gauss1.csv",
                "spectrum_constant.csv", "manifest.json"} <= names
        header, rows = read_csv(tmp_path / "spectrum_delta.csv")
        assert header == ["j", "re_lambda", "im_lambda", "trace_of_mode", "cp_sector"]
        assert len(rows) == 36
        assert all(float(r[1]) <= 1e-9 for r in rows)

    def test_manifest_references_all_files(self, tmp_path):
        assert run_cli(["spectrum", "--set", "params.n_sites=2",
                        "--out", tmp_path]) == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        emitted = {p.name for p in tmp_path.iterdir()} - {"manifest.json"}
        assert set(manifest["files"]) == emitted
        assert manifest["experiment"] == "spectrum"
        assert "wall_time_s" in manifest and "version" in manifest

    def test_reruns_byte_identical(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        for out in (out1, out2):
            assert run_cli(["spectrum", "--set", "params.n_sites=2",
                            "--out", out]) == 0
        for name in ("spectrum_delta.csv", "spectrum_gauss1.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestOtherExperiments:
    def test_gaps_vs_sigma_small(self, tmp_path):
        code = run_cli(["gaps-vs-sigma", "--set", "params.n_sites=2",
                        "--set", "options.sigma_grid=[0.5,2.0]", "--out", tmp_path])
        assert code == 0
        header, rows = read_csv(tmp_path / "gaps.csv")
        assert header == ["kind", "sigma", "delta1", "delta2"]
        assert [r[0] for r in rows] == ["delta", "gaussian", "gaussian", "constant"]
        d1 = [float(r[2]) for r in rows]
        assert d1[-1] <= 1e-8  # constant correlator: vanishing gap
        assert (tmp_path / "rates_delta.csv").exists()

    def test_entropy_small(self, tmp_path):
        code = run_cli(["entropy", "--set", "params.n_sites=2",
                        "--set", "evolution.t_final=0.5",
                        "--set", "options.correlators=[{kind: delta}]",
                        "--out", tmp_path])
        assert code == 0
        header, rows = read_csv(tmp_path / "entropy.csv")
        assert header == ["t", "S", "correlator_tag", "sector_tag"]
        tags = {r[3] for r in rows}
        assert tags == {"full", "even", "odd"}
        first_full = next(r for r in rows if r[3] == "full")
        assert float(first_full[1]) == 0.0  # S(0) = 0

    def test_string_and_tstar_small(self, tmp_path):
        args = ["--set", "params.n_sites=2", "--set", "options.string=[0,1]",
                "--set", "evolution.t_final=1.0", "--set", "evolution.dt=0.02"]
        assert run_cli(["string-vacuum", *args, "--out", tmp_path / "v"]) == 0
        header, rows = read_csv(tmp_path / "v" / "traj_vacuum.csv")
        assert header == ["t", "link", "E_in_units_of_e", "subtracted_flag"]
        t0_sub = [r for r in rows if float(r[0]) == 0.0 and r[3] == "1"]
        assert sorted(float(r[2]) for r in t0_sub) == [-1.0, 0.0, 0.0]
        assert run_cli(["tstar", *args, "--set", "options.d0_values=[0.3]",
                        "--set", "options.t_max=1.0", "--out", tmp_path / "t"]) == 0
        header, rows = read_csv(tmp_path / "t" / "tstar.csv")
        assert header == ["site", "t_star", "D0"]
        assert {r[2] for r in rows} == {"0", "0.3"}

    def test_phase_diagram_small(self, tmp_path):
        code = run_cli(["phase-diagram", "--set", "params.n_sites=2",
                        "--set", "options.m_values=[0.5]",
                        "--set", "options.e_values=[0.8]",
                        "--set", "options.t1=0.2", "--set", "options.t2=0.4",
                        "--set", "evolution.t_final=0.4",
                        "--set", "evolution.dt=0.02", "--out", tmp_path])
        assert code == 0
        header, rows = read_csv(tmp_path / "phase.csv")
        assert header == ["m", "e", "mode", "Ebar"]
        assert {r[2] for r in rows} == {"vacuum", "medium"}

    def test_dilation_small(self, tmp_path):
        code = run_cli(["dilation", "--set", "options.n_cyl_values=[1,2]",
                        "--set", "options.t_final=0.5",
                        "--set", "options.reference_dt=0.005", "--out", tmp_path])
        assert code == 0
        header, rows = read_csv(tmp_path / "dilation.csv")
        assert header == ["t", "n_cyl", "r_H", "r_J", "observable_sum_E",
                          "error_vs_rk4"]
        assert {r[1] for r in rows} == {"1", "2"}
        assert all(r[2] == "inf" for r in rows)

    def test_trotter_closed_small(self, tmp_path):
        code = run_cli(["trotter-closed", "--set", "options.r_values=[3]",
                        "--set", "options.t_max=1.0",
                        "--set", "options.n_points=5", "--out", tmp_path])
        assert code == 0
        header, rows = read_csv(tmp_path / "bounds.csv")
        assert header == ["r", "t", "bound", "measured_norm_error"]
        assert all(float(r[3]) <= float(r[2]) + 1e-12 for r in rows)

    def test_rates_only(self, tmp_path):
        code = run_cli(["rates", "--set", "params.n_sites=2",
                        "--set", "options.sigma_grid=[1.0]", "--out", tmp_path])
        assert code == 0
        header, rows = read_csv(tmp_path / "rates_gauss1.csv")
        assert header == ["k", "D_k", "gamma_diag_mean"]
        assert len(rows) == 4


def test_console_script_entrypoint(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "open_schwinger.cli", "spectrum",
         "--set", "params.n_sites=1", "--out", str(tmp_path)],
        capture_output=True, text=True)
    assert result.returncode == 0, result.stderr
    assert (tmp_path / "manifest.json").exists()


def test_yaml_config_file(tmp_path):
    cfg_file = tmp_path / "cfg.yaml"
    cfg_file.write_text("params:\n  n_sites: 2\nenv:\n  beta: 0.2\n")
    assert run_cli(["spectrum", "--config", cfg_file, "--out", tmp_path / "o"]) == 0
    manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert manifest["config"]["params"]["n_sites"] == 2
    assert manifest["config"]["env"]["beta"] == 0.2
