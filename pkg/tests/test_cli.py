"""Command-line interface: subcommands, exit codes, reproducibility."""

import numpy as np
import pytest

from shifttest import (
    LoftConfig,
    descriptor,
    heavisine_smoothed_coeffs,
    make_texture,
    save_descriptor,
    save_observation_csv,
    save_pgm,
    synthesize_observation,
)
from shifttest.cli import main


@pytest.fixture
def obs_files(tmp_path):
    sig = heavisine_smoothed_coeffs(16, grid=1 << 10)
    obs = synthesize_observation(sig, 0.1, 16, 3)
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    save_observation_csv(obs, a)
    save_observation_csv(obs, b)
    return str(a), str(b)


class TestShiftTestCommand:
    def test_identical_files_accept(self, obs_files, capsys):
        a, b = obs_files
        code = main(["test", "--a", a, "--b", b, "--weights", "projection",
                     "--N", "16", "--alpha", "0.05"])
        out = capsys.readouterr().out
        assert code == 0
        assert "delta=0" in out
        assert "reject=false" in out

    def test_adaptive_command(self, obs_files, capsys):
        a, b = obs_files
        code = main(["test-adaptive", "--a", a, "--b", b, "--weights", "projection", "--N", "8"])
        out = capsys.readouterr().out
        assert code == 0
        assert "reject=false" in out
        assert "delta_tilde=" in out

    def test_missing_file_is_data_error(self, tmp_path, capsys):
        code = main(["test", "--a", str(tmp_path / "no.csv"), "--b", str(tmp_path / "no.csv"),
                     "--N", "4"])
        assert code == 2

    def test_unknown_flag_is_usage_error(self, obs_files):
        a, b = obs_files
        assert main(["test", "--a", a, "--b", b, "--frobnicate"]) == 1

    def test_missing_subcommand_is_usage_error(self):
        assert main([]) == 1


class TestSimulateCommand:
    def test_byte_identical_reruns(self, tmp_path, capsys):
        out1 = tmp_path / "r1"
        out2 = tmp_path / "r2"
        args = ["simulate", "type1", "--reps", "25", "--n", "40", "--seed", "7", "--workers", "1"]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert (out1 / "type1.csv").read_bytes() == (out2 / "type1.csv").read_bytes()
        assert (out1 / "type1.svg").read_bytes() == (out2 / "type1.svg").read_bytes()

    def test_seed_printed_when_omitted(self, tmp_path, capsys):
        code = main(["simulate", "tau-rate", "--reps", "5", "--out", str(tmp_path / "o"),
                     "--workers", "1"])
        out = capsys.readouterr().out
        assert code == 0
        assert "seed=" in out

    def test_spec_file(self, tmp_path):
        spec_file = tmp_path / "ladder.spec"
        spec_file.write_text("reps=10\nn_ladder=40,80\nalpha=0.1\nseed=3\n")
        out = tmp_path / "o"
        code = main(["simulate", "type1", "--spec", str(spec_file), "--out", str(out),
                     "--workers", "1"])
        assert code == 0
        text = (out / "type1.csv").read_text()
        assert text.count("\n") == 1 + 2 * 3  # header + rows

    def test_unknown_spec_key_is_data_error(self, tmp_path):
        spec_file = tmp_path / "bad.spec"
        spec_file.write_text("repz=10\n")
        assert main(["simulate", "type1", "--spec", str(spec_file),
                     "--out", str(tmp_path / "o"), "--workers", "1"]) == 2

    def test_power_nonsmooth_variant(self, tmp_path):
        out = tmp_path / "o"
        code = main(["simulate", "power", "--perturbation", "nonsmooth", "--reps", "5",
                     "--n", "16", "--gamma", "0.5", "--seed", "1", "--out", str(out),
                     "--workers", "1"])
        assert code == 0
        assert (out / "power.csv").exists()


class TestLoftCommands:
    def test_describe_then_match_identical(self, tmp_path, capsys):
        img = make_texture(96, 96, seed=5)
        pgm = tmp_path / "img.pgm"
        save_pgm(img, pgm)
        d1 = tmp_path / "d1.loft"
        d2 = tmp_path / "d2.loft"
        assert main(["loft", "describe", "--image", str(pgm), "--x", "48", "--y", "48",
                     "--out-file", str(d1)]) == 0
        assert main(["loft", "describe", "--image", str(pgm), "--x", "48", "--y", "48",
                     "--out-file", str(d2)]) == 0
        capsys.readouterr()
        code = main(["loft", "match", "--a", str(d1), "--b", str(d2),
                     "--sigma", "30", "--lambda", "2.22"])
        out = capsys.readouterr().out
        assert code == 0
        assert "is_match=true" in out

    def test_geometry_mismatch_is_data_error(self, tmp_path):
        img = make_texture(96, 96, seed=5)
        cfg8 = LoftConfig(k=8)
        cfg16 = LoftConfig(k=16)
        d8 = descriptor(img, (48.0, 48.0), cfg8)
        d16 = descriptor(img, (48.0, 48.0), cfg16)
        p8 = tmp_path / "d8.loft"
        p16 = tmp_path / "d16.loft"
        save_descriptor(d8, p8, cfg8)
        save_descriptor(d16, p16, cfg16)
        assert main(["loft", "match", "--a", str(p8), "--b", str(p16), "--sigma", "30"]) == 2


class TestVerifyBounds:
    def test_passes_with_default_battery(self, tmp_path, capsys):
        code = main(["verify-bounds", "--reps", "2000", "--seed", "3",
                     "--out", str(tmp_path / "vb")])
        out = capsys.readouterr().out
        assert code == 0
        assert "VIOLATED" not in out
        assert (tmp_path / "vb" / "tail_bounds.csv").exists()


class TestHelp:
    @pytest.mark.parametrize("cmd", [
        [], ["test"], ["test-adaptive"], ["simulate"], ["loft"], ["verify-bounds"],
    ])
    def test_help_exits_cleanly(self, cmd, capsys):
        assert main(cmd + ["--help"]) == 0
        assert "usage" in capsys.readouterr().out.lower()
