import math

import pytest

from spsqkd import ConfigError, RunConfig
from spsqkd.cli import main


class TestRunConfig:
    def test_defaults(self):
        cfg = RunConfig.build()
        assert cfg.get("source.mu") == 8.955e-5
        assert cfg.get("sim.protocol") == "bb84"

    def test_unknown_key_suggests_nearest(self):
        with pytest.raises(ConfigError, match="source.mu"):
            RunConfig.build(overrides={"source.nu": "1e-4"})

    def test_file_overrides_defaults(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("# comment line\nsource.mu = 5e-5\nchannel.loss_db = 3.5\n")
        cfg = RunConfig.build(config_file=path)
        assert cfg.get("source.mu") == 5e-5
        assert cfg.get("channel.loss_db") == 3.5
        assert cfg.get("source.g2_pulsed") == 0.356  # untouched default

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("source.mu = 5e-5\n")
        cfg = RunConfig.build(config_file=path, overrides={"source.mu": "7e-5"})
        assert cfg.get("source.mu") == 7e-5

    def test_unknown_key_in_file_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("sorce.mu = 5e-5\n")
        with pytest.raises(ConfigError, match="did you mean"):
            RunConfig.build(config_file=path)

    def test_malformed_line_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("source.mu 5e-5\n")
        with pytest.raises(ConfigError):
            RunConfig.build(config_file=path)

    def test_typed_parsing(self):
        cfg = RunConfig.build(overrides={"sim.n_pulses": "2e6", "sim.seed": "42"})
        assert cfg.get("sim.n_pulses") == 2_000_000
        assert isinstance(cfg.get("sim.n_pulses"), int)

    def test_block_sizes_parse_inf(self):
        cfg = RunConfig.build(overrides={"sweep.block_sizes": "1e9, inf"})
        assert cfg.block_sizes() == [1e9, math.inf]

    def test_param_builders_apply_module_invariants(self):
        cfg = RunConfig.build(overrides={"optics.eta_x": "0.5", "optics.eta_z": "0.1"})
        with pytest.raises(Exception, match="eta"):
            cfg.optics_params()


class TestCliKeyrate:
    def test_reference_row(self, capsys):
        code = main([
            "keyrate", "--qz", "1.63e-5", "--ez", "0.0089", "--ex", "0.0188",
            "--mu", "8.955e-5", "--g2", "0.356", "--fec", "1.1",
            "--n", "inf", "--protocol", "bb84",
        ])
        out = capsys.readouterr().out
        assert code == 0
        header, row = out.strip().splitlines()
        rate = float(dict(zip(header.split(","), row.split(",")))["rate_per_pulse"])
        assert rate == pytest.approx(1.28e-5, rel=0.01)

    def test_rfi_protocol_accepts_c(self, capsys):
        code = main([
            "keyrate", "--qz", "1.63e-5", "--ez", "0.0089",
            "--c", str(2 * (1 - 2 * 0.0188) ** 2), "--protocol", "rfi",
        ])
        assert code == 0
        header, row = capsys.readouterr().out.strip().splitlines()
        rate = float(dict(zip(header.split(","), row.split(",")))["rate_per_pulse"])
        assert rate == pytest.approx(1.34e-5, rel=0.05)

    def test_missing_inputs_is_usage_error(self, capsys):
        code = main(["keyrate", "--ez", "0.01"])
        assert code == 1
        assert capsys.readouterr().err.startswith("error: usage:")

    def test_domain_error_exit_code(self, capsys):
        # gain below the multi-photon bound
        code = main(["keyrate", "--qz", "1e-9", "--ez", "0.01", "--ex", "0.02"])
        assert code == 2
        assert capsys.readouterr().err.startswith("error: domain:")

    def test_unknown_flag_creates_no_output(self, tmp_path, capsys):
        out = tmp_path / "never.csv"
        code = main(["keyrate", "--qz", "1.63e-5", "--ez", "0.0089", "--ex", "0.0188",
                     "--out", str(out), "--frobnicate"])
        assert code == 1
        assert not out.exists()
        assert capsys.readouterr().err.startswith("error: usage:")

    def test_config_precedence_three_layers(self, tmp_path, capsys):
        # defaults: mu = 8.955e-5.  File overrides it; flag overrides the file.
        cfg = tmp_path / "run.cfg"
        cfg.write_text("source.mu = 4e-5\n")
        base = ["keyrate", "--qz", "1.63e-5", "--ez", "0.0089", "--ex", "0.0188"]

        def a_z_of(args):
            code = main(args)
            assert code == 0
            header, row = capsys.readouterr().out.strip().splitlines()
            return float(dict(zip(header.split(","), row.split(",")))["a_z"])

        from spsqkd import untagged_ratio

        assert a_z_of(base) == pytest.approx(untagged_ratio(1.63e-5, 8.955e-5, 0.356))
        assert a_z_of(base + ["--config", str(cfg)]) == pytest.approx(
            untagged_ratio(1.63e-5, 4e-5, 0.356)
        )
        assert a_z_of(base + ["--config", str(cfg), "--mu", "6e-5"]) == pytest.approx(
            untagged_ratio(1.63e-5, 6e-5, 0.356)
        )

    def test_unknown_config_key_exit_code(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("sorce.mu = 4e-5\n")
        code = main(["keyrate", "--qz", "1e-5", "--ez", "0.01", "--ex", "0.02",
                     "--config", str(cfg)])
        assert code == 1
        assert capsys.readouterr().err.startswith("error: config:")


class TestCliByteDeterminism:
    def test_identical_config_identical_csv(self, tmp_path):
        out1 = tmp_path / "a.csv"
        out2 = tmp_path / "b.csv"
        args = ["sweep", "--loss-min", "0", "--loss-max", "4", "--loss-step", "0.5",
                "--block-sizes", "1e10,inf"]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_sweep_header(self, tmp_path):
        out = tmp_path / "sweep.csv"
        assert main(["sweep", "--loss-min", "0", "--loss-max", "1", "--loss-step", "1",
                     "--out", str(out)]) == 0
        assert out.read_text().splitlines()[0] == "loss_db,block_size,rate_per_pulse,clipped"


class TestCliPipelines:
    def test_simulate_then_keyrate_and_rfi(self, tmp_path, capsys):
        tally = tmp_path / "tally.csv"
        code = main([
            "simulate", "--pulses", "400000", "--seed", "9", "--protocol", "rfi",
            "--mu", "0.02", "--loss-db", "0", "--out", str(tally),
        ])
        assert code == 0
        err = capsys.readouterr().err
        assert '"q_z"' in err  # flat summary on the diagnostic stream

        code = main(["keyrate", "--tally", str(tally), "--mu", "0.02", "--g2", "0.356"])
        assert code == 0
        out = capsys.readouterr().out
        assert out.startswith("protocol,")

        code = main(["rfi", str(tally), "--groups", "12"])
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "group,theta_rad,weight,n_z,e_z,c"
        assert len(lines) == 13

    def test_correct_subcommand(self, capsys):
        code = main(["correct", "--q", "2.32e-7", "--e", "0.0416", "--p-noise", "9e-9"])
        assert code == 0
        header, row = capsys.readouterr().out.strip().splitlines()
        values = dict(zip(header.split(","), row.split(",")))
        assert float(values["q_corrected"]) == pytest.approx(2.23e-7, rel=1e-9)
        assert float(values["e_corrected"]) == pytest.approx(0.0231, abs=1e-4)

    def test_correct_buried_signal_domain_error(self, capsys):
        code = main(["correct", "--q", "1e-9", "--e", "0.3", "--p-noise", "2e-9"])
        assert code == 2

    def test_g2_pipeline_with_fit(self, tmp_path, capsys):
        import numpy as np

        rng = np.random.default_rng(21)
        span = int(2e11)
        ta = np.sort(rng.integers(0, span, 40_000))
        tb = np.sort(rng.integers(0, span, 40_000))
        lines = ["#channels=2 #unit=ps"]
        lines += [f"0,{t}" for t in ta]
        lines += [f"1,{t}" for t in tb]
        events = tmp_path / "events.txt"
        events.write_text("\n".join(lines) + "\n")

        out = tmp_path / "g2.csv"
        code = main(["g2", str(events), "--bin-ps", "2001", "--window-ps", "150000",
                     "--fit", "--out", str(out)])
        assert code == 0
        text = out.read_text()
        assert text.splitlines()[0] == "tau_ps,counts,g2"
        assert "# fit_g2_zero=" in text
        assert "# fit_converged=true" in text

    def test_no_subcommand_is_usage_error(self, capsys):
        assert main([]) == 1
