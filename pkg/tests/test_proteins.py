import math

import numpy as np
import pytest

from shapebias import (
    AtomCloud,
    DegenerateSignalError,
    DomainError,
    corrected_rg_squared,
    false_positive_probability,
    false_positive_underestimation,
    radius_of_gyration,
    read_atoms,
    rg_squared_bias,
    substream,
)


class TestRadiusOfGyration:
    def test_two_atoms(self):
        cloud = AtomCloud(np.array([[1.0, 0, 0], [-1.0, 0, 0]]))
        assert radius_of_gyration(cloud) == pytest.approx(1.0)

    def test_coincident_atoms(self):
        cloud = AtomCloud(np.tile([2.0, -1.0, 3.0], (5, 1)))
        assert radius_of_gyration(cloud) == 0.0

    def test_matches_double_loop_oracle(self):
        rng = substream(97, 0)
        pos = rng.standard_normal((100, 3)) * 5.0
        cloud = AtomCloud(pos)
        centroid = np.zeros(3)
        for row in pos:
            centroid += row
        centroid /= len(pos)
        total = 0.0
        for row in pos:
            for k in range(3):
                total += (row[k] - centroid[k]) ** 2
        oracle = math.sqrt(total / len(pos))
        assert radius_of_gyration(cloud) == pytest.approx(oracle, abs=1e-12)

    def test_validation(self):
        with pytest.raises(DomainError):
            AtomCloud(np.zeros((1, 3)))
        with pytest.raises(DomainError):
            AtomCloud(np.full((3, 3), np.nan))


class TestRgSquaredBias:
    def test_low_noise_benchmark_number(self):
        # sigma=0.3 A on a 10 A protein: ~0.3% relative error on Rg^2
        rel = rg_squared_bias(0.3, 10_000) / 10.0**2
        assert abs(rel - 0.003) < 0.001
        assert round(rel * 100, 1) == 0.3

    def test_high_noise_benchmark_number(self):
        # sigma=1.7 A: quoted benchmark value 8.6%; the formula gives 8.67%
        rel = rg_squared_bias(1.7, 10_000) / 10.0**2
        assert abs(rel - 0.086) < 0.001

    def test_exact_small_counts(self):
        assert rg_squared_bias(1.0, 2) == pytest.approx(1.5)
        assert rg_squared_bias(2.0, 10) == pytest.approx(4.0 * 2.7)

    def test_monte_carlo_exactness(self):
        rng = substream(97, 1)
        sigma = 1.0
        for n_atoms, replicas in ((2, 40_000), (10, 40_000), (500, 5_000)):
            pos = rng.standard_normal((n_atoms, 3)) * 4.0
            true_rg2 = radius_of_gyration(AtomCloud(pos)) ** 2
            centered = pos - pos.mean(axis=0)
            inflations = np.empty(replicas)
            for i in range(replicas):
                eps = rng.standard_normal((n_atoms, 3)) * sigma
                noisy = centered + eps
                noisy -= noisy.mean(axis=0)
                inflations[i] = np.mean(np.sum(noisy**2, axis=1)) - true_rg2
            se = inflations.std() / math.sqrt(replicas)
            assert abs(inflations.mean() - rg_squared_bias(sigma, n_atoms)) < 3 * se

    def test_validation(self):
        with pytest.raises(DomainError):
            rg_squared_bias(-1.0, 10)
        with pytest.raises(DomainError):
            rg_squared_bias(0.3, 1)


class TestCorrectedRg:
    def test_sigma_zero_identity(self):
        out = corrected_rg_squared(100.0, 0.0, 500)
        assert out.rg_squared == 100.0
        assert math.isinf(out.snr_squared)

    def test_algebraic_inverse(self):
        true_rg2 = 57.3
        observed = true_rg2 + rg_squared_bias(0.8, 123)
        out = corrected_rg_squared(observed, 0.8, 123)
        assert out.rg_squared == pytest.approx(true_rg2, abs=1e-12)
        assert out.snr_squared == pytest.approx(true_rg2 / 0.64)

    def test_monte_carlo_unbiased(self):
        rng = substream(97, 2)
        sigma, n_atoms, replicas = 1.0, 200, 20_000
        pos = rng.standard_normal((n_atoms, 3)) * 4.0
        true_rg2 = radius_of_gyration(AtomCloud(pos)) ** 2
        centered = pos - pos.mean(axis=0)
        corrected = np.empty(replicas)
        for i in range(replicas):
            noisy = centered + rng.standard_normal((n_atoms, 3)) * sigma
            noisy -= noisy.mean(axis=0)
            observed = np.mean(np.sum(noisy**2, axis=1))
            corrected[i] = corrected_rg_squared(observed, sigma, n_atoms).rg_squared
        se = corrected.std() / math.sqrt(replicas)
        assert abs(corrected.mean() - true_rg2) < 3 * se

    def test_degenerate_signal_rejected(self):
        with pytest.raises(DegenerateSignalError):
            corrected_rg_squared(0.1, 1.0, 500)


class TestFalsePositive:
    def test_motif_detection_worked_example(self):
        out = false_positive_probability(20.0, 0.35, chi_sq=8.0)
        assert out.error_zone_volume == pytest.approx(4.06, abs=0.01)
        assert out.protein_volume == pytest.approx(33510.0, rel=1e-4)
        assert out.probability == pytest.approx(1.2e-4, abs=0.05e-4)

    def test_zero_noise_zero_probability(self):
        assert false_positive_probability(20.0, 0.0).probability == 0.0

    def test_monotonicity(self):
        p_lo = false_positive_probability(20.0, 0.2).probability
        p_hi = false_positive_probability(20.0, 0.4).probability
        assert p_hi > p_lo
        p_small = false_positive_probability(10.0, 0.35).probability
        p_big = false_positive_probability(30.0, 0.35).probability
        assert p_small > p_big

    def test_underestimation_benchmark_range(self):
        under = false_positive_underestimation(20.0, 0.35, 10**6)
        assert 0.0026 <= under <= 0.0028


class TestAtomFile(object):
    def test_read_plain_text(self, tmp_path):
        path = tmp_path / "atoms.txt"
        path.write_text(
            "# comment line\n"
            "1.0 2.0 3.0\n"
            "4.0 5.0 6.0  # trailing comment\n"
            "\n"
            "7.0 8.0 9.0\n"
        )
        cloud = read_atoms(path)
        assert cloud.n_atoms == 3
        np.testing.assert_allclose(cloud.positions[1], [4.0, 5.0, 6.0])

    def test_bad_column_count(self, tmp_path):
        path = tmp_path / "atoms.txt"
        path.write_text("1.0 2.0\n3.0 4.0\n")
        with pytest.raises(DomainError):
            read_atoms(path)

    def test_too_few_atoms(self, tmp_path):
        path = tmp_path / "atoms.txt"
        path.write_text("1.0 2.0 3.0\n")
        with pytest.raises(DomainError):
            read_atoms(path)
