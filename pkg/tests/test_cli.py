import json

import numpy as np
import pytest

from hetgas import cli
from hetgas.config import ScenarioConfig, load_preset, preset_names

QUICK_SCHED = ('run.schedule={"beta0":0.5,"beta_growth":2.0,"stages":6,'
               '"steps_per_stage":80,"step_size":0.5,"residual_tol":1e-3,'
               '"descent_steps":3000}')
QUICK_OVERRIDES = [
    "run.n=60",
    QUICK_SCHED,
    "run.replicas=1",
]


def run(argv):
    return cli.main(argv)


class TestExitCodes:
    def test_missing_config_source(self, capsys):
        assert run(["predict"]) == cli.EXIT_CONFIG
        err = capsys.readouterr().err
        assert "error code=2" in err and "kind=" in err

    def test_both_sources_rejected(self, tmp_path, capsys):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps(load_preset("fig4_atom").to_dict()))
        assert run(["predict", "--preset", "fig4_atom",
                    "--config", str(cfg)]) == cli.EXIT_CONFIG

    def test_unknown_preset(self, capsys):
        assert run(["predict", "--preset", "nope"]) == cli.EXIT_CONFIG
        assert "nope" in capsys.readouterr().err

    def test_unknown_key_diagnostic(self, tmp_path, capsys):
        doc = load_preset("fig4_atom").to_dict()
        doc["run"]["bogus_key"] = 1
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps(doc))
        assert run(["predict", "--config", str(cfg)]) == cli.EXIT_CONFIG
        assert "bogus_key" in capsys.readouterr().err

    def test_wrong_regime_is_config_error(self, tmp_path, capsys):
        # non-monotone weight: no closed-form profile to predict
        assert run(["predict", "--preset", "fig8_eta",
                    "--override", "gas.weight.family=sine_offset",
                    "--out", str(tmp_path)]) == cli.EXIT_CONFIG

    def test_convergence_failure(self, tmp_path, capsys):
        rc = run(["simulate", "--preset", "fig1_constant",
                  "--out", str(tmp_path),
                  "--override", "run.n=60",
                  "--override", 'run.schedule={"stages":1,"steps_per_stage":1,'
                                '"descent_steps":1,"residual_tol":1e-15}'])
        assert rc == cli.EXIT_CONVERGENCE
        assert "error code=3" in capsys.readouterr().err

    def test_insufficient_statistics(self, tmp_path, capsys):
        rc = run(["stats", "--preset", "fig1_constant",
                  "--out", str(tmp_path),
                  "--override", "run.n=60",
                  "--override", QUICK_SCHED,
                  "--override", "analysis.observables=[\"correlation\"]",
                  "--override", "analysis.r0_list=[100.0]",
                  "--override", "analysis.annulus_width=0.001"])
        assert rc == cli.EXIT_STATISTICS
        assert "error code=4" in capsys.readouterr().err


class TestPresets:
    def test_all_presets_round_trip(self):
        for name in preset_names():
            doc = load_preset(name).to_dict()
            again = ScenarioConfig.from_dict(doc).to_dict()
            assert again == doc

    def test_presets_build_specs(self):
        for name in preset_names():
            load_preset(name).build_gas_spec()


class TestPredict:
    def test_fig4_shell_radii(self, tmp_path):
        assert run(["predict", "--preset", "fig4_atom",
                    "--out", str(tmp_path)]) == cli.EXIT_OK
        rows = np.loadtxt(tmp_path / "shells.csv", delimiter=",", comments="#",
                          skiprows=3)
        expected = np.array([
            [3.0, 0.0, 0.5773502692],
            [2.0, 0.7071067812, 0.9128709292],
            [1.0, 1.2909944487, 1.4142135624],
        ])
        assert np.allclose(rows[:, [0, 2, 3]], expected, atol=1e-9)
        assert (tmp_path / "profile.csv").exists()
        assert (tmp_path / "profile.png").exists()

    def test_constant_weight_profile(self, tmp_path):
        assert run(["predict", "--preset", "fig1_constant",
                    "--out", str(tmp_path),
                    "--override", "output.formats=[\"csv\"]"]) == cli.EXIT_OK
        assert (tmp_path / "profile.csv").exists()
        assert not (tmp_path / "profile.png").exists()


class TestSimulate:
    def test_outputs_and_reproducibility(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            argv = ["simulate", "--preset", "fig1_constant",
                    "--out", str(out), "--seed", "5"]
            for ov in QUICK_OVERRIDES:
                argv += ["--override", ov]
            assert run(argv) == cli.EXIT_OK
        for fname in ("checkpoint_0.csv", "trace_0.csv"):
            assert (a / fname).read_bytes() == (b / fname).read_bytes()
        assert (a / "config_0.png").stat().st_size > 0
        assert (a / "trace_0.png").stat().st_size > 0
        data = np.loadtxt(a / "checkpoint_0.csv", delimiter=",", comments="#",
                          skiprows=7)
        assert data.shape == (60, 3)  # q, x1, x2

    def test_seed_changes_output(self, tmp_path):
        outs = []
        for seed in (1, 2):
            out = tmp_path / f"s{seed}"
            argv = ["simulate", "--preset", "fig1_constant",
                    "--out", str(out), "--seed", str(seed)]
            for ov in QUICK_OVERRIDES:
                argv += ["--override", ov]
            assert run(argv) == cli.EXIT_OK
            outs.append((out / "checkpoint_0.csv").read_bytes())
        assert outs[0] != outs[1]


class TestStatsCommand:
    def test_observable_csvs(self, tmp_path):
        argv = ["stats", "--preset", "fig4_atom", "--out", str(tmp_path),
                "--override", "analysis.observables=[\"radial\",\"nearest\",\"ordering\"]"]
        for ov in QUICK_OVERRIDES:
            argv += ["--override", ov]
        assert run(argv) == cli.EXIT_OK
        for fname in ("radial.csv", "nearest.csv", "ordering.csv",
                      "radial.png", "nearest.png"):
            assert (tmp_path / fname).exists()


class TestSplitting:
    def test_identity_in_report(self, tmp_path):
        assert run(["splitting", "--preset", "fig1_constant",
                    "--out", str(tmp_path),
                    "--override", "run.n=80"]) == cli.EXIT_OK
        doc = json.loads((tmp_path / "splitting.json").read_text())
        total = doc["leading"] + doc["zeta_term"] + doc["quadratic_remainder"]
        assert total == pytest.approx(doc["total_check"], rel=1e-12)


class TestInverse:
    def test_fig7_design(self, tmp_path):
        assert run(["inverse", "--preset", "fig7_reconstruction",
                    "--out", str(tmp_path)]) == cli.EXIT_OK
        doc = json.loads((tmp_path / "inverse_report.json").read_text())
        assert doc["q_min"] == pytest.approx(np.sqrt(2.0 / 3.0), abs=1e-6)
        assert doc["predicted_sup_error"] < 1e-4
        q, nu = np.loadtxt(tmp_path / "nu.csv", delimiter=",", comments="#",
                           skiprows=5, unpack=True)
        assert np.all(np.diff(q) > 0)
        assert np.trapezoid(nu, q) == pytest.approx(1.0, abs=1e-3)

    def test_bad_target_path(self, tmp_path, capsys):
        assert run(["inverse", "--preset", "fig7_reconstruction",
                    "--out", str(tmp_path),
                    "--target", "does_not_exist.csv"]) == cli.EXIT_CONFIG
