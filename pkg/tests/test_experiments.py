"""Monte Carlo harness: determinism, seeding, output formats."""

import xml.etree.ElementTree as ET

import numpy as np
import pytest

from shifttest import (
    ExperimentSpec,
    emit_csv,
    emit_svg_plot,
    load_csv,
    run_loft_eval,
    run_power,
    run_tail_bounds,
    run_tau_rate,
    run_type1_adaptive,
    run_type1_known,
)
from shifttest.experiments import DEFAULT_TAIL_BATTERY, TailBoundCase


def tiny_type1_spec(**kw):
    base = dict(kind="type1_known", reps=60, n_ladder=(40, 160), seed=123)
    base.update(kw)
    return ExperimentSpec(**base)


class TestDeterminism:
    def test_rerun_identical(self):
        rows_a = run_type1_known(tiny_type1_spec())
        rows_b = run_type1_known(tiny_type1_spec())
        assert rows_a == rows_b

    def test_chunk_size_irrelevant(self):
        rows_a = run_type1_known(tiny_type1_spec(), chunk=7)
        rows_b = run_type1_known(tiny_type1_spec(), chunk=64)
        assert rows_a == rows_b

    def test_worker_count_irrelevant(self):
        rows_a = run_type1_known(tiny_type1_spec(), workers=1, chunk=16)
        rows_b = run_type1_known(tiny_type1_spec(), workers=2, chunk=16)
        assert rows_a == rows_b

    def test_csv_bytes_identical(self, tmp_path):
        cols = ["n", "N", "sigma", "family", "reps", "accept", "se"]
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        emit_csv(run_type1_known(tiny_type1_spec()), p1, cols)
        emit_csv(run_type1_known(tiny_type1_spec()), p2, cols)
        assert p1.read_bytes() == p2.read_bytes()

    def test_seed_changes_output(self):
        spec_a = ExperimentSpec(kind="tau_rate", reps=40, sigma_ladder=(0.05,), seed=1)
        spec_b = ExperimentSpec(kind="tau_rate", reps=40, sigma_ladder=(0.05,), seed=2)
        assert run_tau_rate(spec_a) != run_tau_rate(spec_b)


class TestType1Runners:
    def test_known_row_shape(self):
        rows = run_type1_known(tiny_type1_spec())
        assert len(rows) == 2 * 3
        for row in rows:
            assert 0.0 <= row["accept"] <= 1.0
            assert row["N"] == int(np.ceil(50 * row["n"] ** 0.25))

    def test_adaptive_runs_and_is_conservative(self):
        spec = ExperimentSpec(kind="type1_adaptive", reps=80, n_ladder=(40,), seed=5)
        rows = run_type1_adaptive(spec)
        for row in rows:
            assert row["p"] >= 2 * row["N"]
            # Theorem-3 threshold is an upper bound: very few rejections
            assert row["reject"] <= 0.05 + 3 * row["se"] + 1e-9

    def test_single_family_selection(self):
        rows = run_type1_known(tiny_type1_spec(weight_families=("projection",)))
        assert {row["family"] for row in rows} == {"projection"}


class TestPowerRunner:
    def test_gamma_zero_matches_null_rate(self):
        spec = ExperimentSpec(
            kind="power_smooth_cos", reps=150, n_ladder=(16,), gamma_ladder=(0.0,), seed=9
        )
        row = run_power(spec)[0]
        # under H0 the test is conservative; far below alpha + 3 SE
        assert row["power"] <= 0.05 + 3 * row["se"] + 1e-9

    def test_large_gamma_detected_at_low_noise(self):
        spec = ExperimentSpec(
            kind="power_smooth_cos", reps=60, n_ladder=(4096,), gamma_ladder=(1.5,), seed=10
        )
        assert run_power(spec)[0]["power"] >= 0.95

    def test_nonsmooth_needs_larger_gamma(self):
        gammas = (2.0,)
        smooth = run_power(ExperimentSpec(
            kind="power_smooth_cos", reps=80, n_ladder=(4096,), gamma_ladder=gammas, seed=11
        ))[0]["power"]
        rough = run_power(ExperimentSpec(
            kind="power_nonsmooth", reps=80, n_ladder=(4096,), gamma_ladder=gammas, seed=11
        ))[0]["power"]
        assert smooth >= 0.95
        assert rough <= 0.2

    def test_adaptive_power_runs(self):
        spec = ExperimentSpec(
            kind="power_adaptive", reps=30, n_ladder=(20,), gamma_ladder=(0.0, 1.0), seed=12
        )
        rows = run_power(spec)
        assert len(rows) == 2
        assert all(0.0 <= row["power"] <= 1.0 for row in rows)

    def test_with_shift_option(self):
        spec = ExperimentSpec(
            kind="power_smooth_cos", reps=50, n_ladder=(256,), gamma_ladder=(0.0,),
            seed=13, with_shift=True,
        )
        row = run_power(spec)[0]
        assert row["power"] <= 0.05 + 3 * row["se"] + 1e-9


class TestTauRate:
    def test_median_error_decreases(self):
        spec = ExperimentSpec(kind="tau_rate", reps=120, sigma_ladder=(0.08, 0.002), seed=14)
        rows = run_tau_rate(spec)
        assert rows[0]["median_abs_err"] > rows[1]["median_abs_err"]

    def test_zero_noise_recovers_shift(self):
        spec = ExperimentSpec(kind="tau_rate", reps=20, sigma_ladder=(0.05, 0.0), seed=15)
        rows = run_tau_rate(spec)
        assert rows[1]["median_abs_err"] < 1e-6


class TestTailBounds:
    def test_default_battery_all_hold(self):
        spec = ExperimentSpec(kind="tail_bounds", reps=4000, seed=16)
        rows = run_tail_bounds(spec)
        assert len(rows) == len(DEFAULT_TAIL_BATTERY)
        assert all(row["ok"] for row in rows)

    def test_vanishing_bound_no_exceedances(self):
        spec = ExperimentSpec(kind="tail_bounds", reps=4000, seed=17)
        battery = (TailBoundCase("lemma2", (1.0, 1.0, 1.0, 1.0), x=7.0, label="far tail"),)
        row = run_tail_bounds(spec, battery=battery)[0]
        assert row["bound"] < 1e-6
        assert row["empirical"] == 0.0

    def test_lemma4_single_coordinate_matches_chi2(self):
        # exact oracle: P(chi^2_2 >= 2 + 4 sqrt(2) + 8) = e^{-(10 + 4 sqrt(2))/2}
        from scipy.stats import chi2

        thr = 2.0 + 4.0 * np.sqrt(2.0) + 8.0
        exact = float(chi2.sf(thr, df=2))
        assert exact == pytest.approx(np.exp(-(10 + 4 * np.sqrt(2)) / 2), rel=1e-12)
        spec = ExperimentSpec(kind="tail_bounds", reps=200_000, seed=18)
        battery = (TailBoundCase("lemma4", (1.0,), y=2.0, label="single"),)
        row = run_tail_bounds(spec, battery=battery)[0]
        se = np.sqrt(exact * (1 - exact) / spec.reps)
        assert abs(row["empirical"] - exact) <= 3 * se


class TestLoftEval:
    def test_small_run_structure(self, tmp_path):
        spec = ExperimentSpec(kind="loft_eval", reps=1, sigma_ladder=(30.0,), seed=19)
        from shifttest import make_texture

        img = make_texture(180, 200, seed=2)
        res = run_loft_eval(spec, image_a=img, pairs=25, calibration_reps=40,
                            out_dir=tmp_path / "loft")
        assert len(res["sigmas"]) == 1
        summary = res["sigmas"][0]["summary"]
        assert summary["true_known_match_rate"] > summary["false_known_match_rate"]
        sample_file = tmp_path / "loft" / "loft_sigma30_true_known.csv"
        cols, rows = load_csv(sample_file)
        assert cols == ["idx", "delta", "t", "tau_hat", "is_match"]
        assert len(rows) == 25

    def test_keypoints_respect_separation(self):
        from shifttest.experiments import _sample_keypoints

        rng = np.random.default_rng(0)
        pts = _sample_keypoints(rng, 300, (43, 266), (32, 406))
        d2 = np.sum((pts[None, :, :] - pts[:, None, :]) ** 2, axis=-1)
        d2[np.diag_indices(300)] = np.inf
        assert np.sqrt(d2.min()) >= 5.0

    def test_keypoint_overflow_rejected(self):
        from shifttest.experiments import _sample_keypoints

        rng = np.random.default_rng(0)
        with pytest.raises(ValueError, match="cannot place"):
            _sample_keypoints(rng, 10_000, (43, 100), (32, 100))


class TestOutputs:
    def test_csv_round_trip_bit_exact(self, tmp_path):
        rows = [
            {"n": 40, "value": 0.123456789012345678, "name": "proj"},
            {"n": 80, "value": 1e-17, "name": "tikh"},
        ]
        p1 = tmp_path / "x.csv"
        emit_csv(rows, p1, ["n", "value", "name"])
        cols, back = load_csv(p1)
        p2 = tmp_path / "y.csv"
        emit_csv(back, p2, cols)
        assert p1.read_bytes() == p2.read_bytes()

    def test_empty_summary_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit_csv([], tmp_path / "no.csv", ["a"])

    def test_svg_one_polyline_per_family(self, tmp_path):
        rows = run_type1_known(tiny_type1_spec())
        path = tmp_path / "fig.svg"
        emit_svg_plot(rows, path, "n", "accept", "family", title="type I", log_x=True)
        tree = ET.parse(path)
        polylines = tree.findall(".//{http://www.w3.org/2000/svg}polyline")
        assert len(polylines) == 3

    def test_svg_single_point(self, tmp_path):
        path = tmp_path / "one.svg"
        emit_svg_plot([{"x": 1.0, "y": 0.5}], path, "x", "y")
        tree = ET.parse(path)
        assert tree.findall(".//{http://www.w3.org/2000/svg}polyline")


class TestSpecValidation:
    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            ExperimentSpec(kind="nope")

    def test_bad_family(self):
        with pytest.raises(ValueError):
            ExperimentSpec(kind="type1_known", weight_families=("fourier",))

    def test_power_requires_power_kind(self):
        with pytest.raises(ValueError):
            run_power(ExperimentSpec(kind="type1_known"))
