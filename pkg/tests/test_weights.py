"""Weight families, norms, and condition checks."""

import numpy as np
import pytest

from shifttest import (
    check_conditions,
    custom_weights,
    load_weights_csv,
    pinsker_weights,
    projection_weights,
    save_weights_csv,
    tikhonov_weights,
    weight_norms,
)


class TestConstructors:
    def test_projection_is_indicator(self):
        w = projection_weights(5)
        assert np.array_equal(w.nu, np.ones(5))

    def test_projection_norms(self):
        l1, l2 = weight_norms(projection_weights(5))
        assert l1 == 5.0
        assert l2 == pytest.approx(np.sqrt(5.0))

    def test_tikhonov_example_values(self):
        w = tikhonov_weights(4, kappa=0.5, mu=2.0)
        assert np.allclose(w.nu, [0.8, 0.5, 1.0 / 3.25, 0.2], atol=5e-5)

    def test_tikhonov_first_weight_tends_to_one(self):
        vals = [tikhonov_weights(N, 0.5, 2.0).nu[0] for N in (4, 64, 4096)]
        assert vals[0] < vals[1] < vals[2] < 1.0
        assert 1.0 - vals[2] < 1e-6

    def test_tikhonov_strictly_decreasing(self):
        w = tikhonov_weights(50, 0.7, 3.0)
        assert np.all(np.diff(w.nu) < 0)

    def test_pinsker_example_values(self):
        w = pinsker_weights(4, mu=2.0)
        assert np.allclose(w.nu, [0.9375, 0.75, 0.4375, 0.0], atol=1e-15)

    def test_pinsker_last_weight_zero(self):
        assert pinsker_weights(17, 1.5).nu[-1] == 0.0

    def test_pinsker_degenerate_single_weight(self):
        w = pinsker_weights(1, 2.0)
        assert np.array_equal(w.nu, [0.0])
        report = check_conditions(w, c_lower=0.5, c_bar=0.5)
        assert not report.a_holds and not report.b_holds

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            tikhonov_weights(4, kappa=0.0, mu=2.0)
        with pytest.raises(ValueError):
            tikhonov_weights(4, kappa=1.0, mu=1.0)
        with pytest.raises(ValueError):
            pinsker_weights(4, mu=0.0)
        with pytest.raises(ValueError):
            projection_weights(0)

    def test_custom_range_enforced(self):
        with pytest.raises(ValueError):
            custom_weights([0.5, 1.2])
        with pytest.raises(ValueError):
            custom_weights([-0.1])


class TestNorms:
    def test_all_zero_custom(self):
        assert weight_norms(custom_weights([0.0, 0.0])) == (0.0, 0.0)

    def test_pinsker_example_norms(self):
        l1, l2 = weight_norms(pinsker_weights(4, 2.0))
        assert l1 == pytest.approx(2.125)
        assert l2 == pytest.approx(np.sqrt(1.6328125))

    def test_norm_inequalities_random_families(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            N = int(rng.integers(1, 60))
            kind = rng.integers(0, 4)
            if kind == 0:
                w = projection_weights(N)
            elif kind == 1:
                w = tikhonov_weights(N, float(rng.uniform(0.1, 2)), float(rng.uniform(1.1, 4)))
            elif kind == 2:
                w = pinsker_weights(N, float(rng.uniform(0.2, 4)))
            else:
                w = custom_weights(rng.uniform(0, 1, N))
            assert np.all((0 <= w.nu) & (w.nu <= 1))
            assert w.l2**2 <= w.l1 + 1e-12
            assert w.l1 <= N + 1e-12

    def test_projection_chi2_dof_is_2N(self):
        w = projection_weights(16)
        assert 2 * w.l1**2 / w.l2**2 == pytest.approx(32.0)


class TestConditions:
    def test_projection_report(self):
        report = check_conditions(projection_weights(8), c_lower=1.0, c_bar=0.5)
        assert report.a_holds and report.b_holds
        assert report.c_index == 9

    def test_pinsker_report(self):
        report = check_conditions(pinsker_weights(4, 2.0), c_lower=0.25, c_bar=0.5)
        assert not report.a_holds
        assert report.c_index == 3

    def test_tikhonov_sum_of_squares(self):
        report = check_conditions(tikhonov_weights(4, 0.5, 2.0), c_lower=0.2, c_bar=0.5)
        assert report.b_holds
        assert report.sum_sq == pytest.approx(0.64 + 0.25 + (1 / 3.25) ** 2 + 0.04, abs=1e-4)

    def test_parameter_validation(self):
        w = projection_weights(4)
        with pytest.raises(ValueError):
            check_conditions(w, c_lower=0.0, c_bar=0.5)
        with pytest.raises(ValueError):
            check_conditions(w, c_lower=1.0, c_bar=1.0)


class TestWeightFiles:
    def test_round_trip(self, tmp_path):
        w = pinsker_weights(6, 2.0)
        path = tmp_path / "w.csv"
        save_weights_csv(w, path)
        back = load_weights_csv(path)
        assert back.N == 6
        assert np.allclose(back.nu, w.nu, rtol=0, atol=0)

    def test_omitted_indices_mean_zero(self, tmp_path):
        path = tmp_path / "sparse.csv"
        path.write_text("1,1\n4,0.25\n")
        w = load_weights_csv(path)
        assert w.N == 4
        assert np.array_equal(w.nu, [1.0, 0.0, 0.0, 0.25])

    def test_duplicate_index_rejected(self, tmp_path):
        path = tmp_path / "dup.csv"
        path.write_text("1,0.5\n1,0.6\n")
        with pytest.raises(ValueError, match="duplicate"):
            load_weights_csv(path)
