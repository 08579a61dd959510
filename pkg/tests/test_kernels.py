import math
import time

import numpy as np
import pytest
import scipy.stats

from errest import (
    BolsteringSpec,
    InsufficientClassDataError,
    InvalidSpecError,
    LabeledDataset,
    chi_median,
    diagonal_sigmas,
    halfspace_mass,
    make_rng,
    mean_min_distance,
    normal_cdf,
    sample_kernel,
    spherical_sigmas,
)
from errest.kernels import chi_cdf, regularized_gamma_p

PAPER_ALPHAS = {1: 0.674, 2: 1.177, 3: 1.538, 4: 1.832, 5: 2.086}


class TestChiMedian:
    def test_quoted_low_dimension_values(self):
        for d, alpha in PAPER_ALPHAS.items():
            assert chi_median(d) == pytest.approx(alpha, abs=1e-3)

    def test_matches_scipy_quantile(self):
        for d in (1, 2, 3, 7, 10, 25, 50, 100):
            assert chi_median(d) == pytest.approx(scipy.stats.chi.ppf(0.5, d), abs=1e-7)

    def test_strictly_increasing(self):
        values = [chi_median(d) for d in range(1, 31)]
        assert all(b > a for a, b in zip(values, values[1:]))

    def test_sampling_oracle_d10(self):
        rng = make_rng(42)
        samples = np.linalg.norm(rng.standard_normal((1_000_000, 10)), axis=1)
        assert chi_median(10) == pytest.approx(float(np.median(samples)), abs=0.01)

    def test_rejects_bad_dimension(self):
        with pytest.raises(InvalidSpecError):
            chi_median(0)

    def test_gamma_cdf_matches_scipy(self):
        for a in (0.5, 1.0, 2.5, 7.0):
            for x in (0.01, 0.5, 1.0, 3.0, 10.0, 40.0):
                assert regularized_gamma_p(a, x) == pytest.approx(
                    scipy.stats.gamma.cdf(x, a), abs=1e-12
                )

    def test_chi_cdf_median_is_half(self):
        for d in (1, 4, 9):
            assert chi_cdf(chi_median(d), d) == pytest.approx(0.5, abs=1e-8)


class TestNormalCdf:
    def test_matches_scipy(self):
        z = np.linspace(-6, 6, 41)
        assert normal_cdf(z) == pytest.approx(scipy.stats.norm.cdf(z), abs=1e-14)

    def test_scalar(self):
        assert normal_cdf(0.0) == 0.5


def cluster_dataset(seed=0, n=40, d=3, spread=1.0):
    rng = make_rng(seed)
    x0 = rng.normal(size=(n // 2, d)) * spread
    x1 = rng.normal(size=(n - n // 2, d)) * spread + 4.0
    features = np.vstack([x0, x1])
    labels = np.array([0] * (n // 2) + [1] * (n - n // 2))
    return LabeledDataset(features, labels, 2)


class TestSigmaSelection:
    def test_spherical_one_dimension_unit(self):
        alpha = chi_median(1)
        ds = LabeledDataset(
            np.array([[0.0], [alpha], [10.0], [10.0 + alpha]]), np.array([0, 0, 1, 1]), 2
        )
        sig = spherical_sigmas(ds)
        assert sig == pytest.approx([1.0, 1.0], abs=1e-9)
        # the rounded 0.674 from the quoted table lands within 1e-3
        ds674 = LabeledDataset(
            np.array([[0.0], [0.674], [10.0], [10.674]]), np.array([0, 0, 1, 1]), 2
        )
        assert spherical_sigmas(ds674) == pytest.approx([1.0, 1.0], abs=1e-3)

    def test_duplicated_points_degenerate(self):
        ds = LabeledDataset(
            np.array([[1.0, 2.0], [1.0, 2.0], [0.0, 0.0], [3.0, 3.0]]),
            np.array([0, 0, 1, 1]),
            2,
        )
        assert spherical_sigmas(ds)[0] == 0.0

    def test_composition_oracle(self):
        ds = cluster_dataset(seed=7)
        sig = spherical_sigmas(ds)
        for j in (0, 1):
            assert sig[j] == pytest.approx(
                mean_min_distance(ds, j) / chi_median(ds.d), rel=1e-12
            )

    def test_scales_linearly_with_features(self):
        ds = cluster_dataset(seed=8)
        scaled = LabeledDataset(2.5 * ds.features, ds.labels, 2)
        assert spherical_sigmas(scaled) == pytest.approx(2.5 * spherical_sigmas(ds), rel=1e-9)

    def test_diagonal_unit_and_degenerate(self):
        alpha = chi_median(1)
        ds = LabeledDataset(
            np.array([[0.0, 5.0], [alpha, 5.0], [9.0, 0.0], [9.0, 1.0]]),
            np.array([0, 0, 1, 1]),
            2,
        )
        sig = diagonal_sigmas(ds)
        assert sig[0, 0] == pytest.approx(1.0, abs=1e-9)
        assert sig[0, 1] == 0.0  # constant coordinate
        assert sig[1, 0] == 0.0

    def test_diagonal_matches_sorted_oracle(self):
        rng = make_rng(11)
        vals = rng.normal(size=30)
        features = np.column_stack([np.concatenate([vals, rng.normal(size=30)])])
        ds = LabeledDataset(features, np.array([0] * 30 + [1] * 30), 2)
        s = np.sort(vals)
        gaps = np.diff(s)
        nearest = np.empty(30)
        nearest[0], nearest[-1] = gaps[0], gaps[-1]
        nearest[1:-1] = np.minimum(gaps[:-1], gaps[1:])
        assert diagonal_sigmas(ds)[0, 0] == pytest.approx(
            nearest.mean() / chi_median(1), rel=1e-12
        )

    def test_diagonal_missing_class_rejected(self):
        ds = LabeledDataset(make_rng(2).normal(size=(10, 2)), np.zeros(10, dtype=int), 2)
        with pytest.raises(InsufficientClassDataError):
            diagonal_sigmas(ds)

    def test_error_names_the_class(self):
        ds = LabeledDataset(np.array([[0.0], [1.0], [2.0]]), np.array([0, 0, 1]), 2)
        with pytest.raises(InsufficientClassDataError, match="class 1"):
            spherical_sigmas(ds)


class TestBolsteringSpec:
    def test_validation(self):
        with pytest.raises(InvalidSpecError):
            BolsteringSpec(family="cubic")
        with pytest.raises(InvalidSpecError):
            BolsteringSpec(kappa=0.0)
        with pytest.raises(InvalidSpecError):
            BolsteringSpec(mc_samples=0)
        with pytest.raises(InvalidSpecError):
            BolsteringSpec(sigmas=np.array([-1.0, 1.0]))
        with pytest.raises(InvalidSpecError):
            BolsteringSpec(family="diagonal", sigmas=np.array([1.0, 1.0]))

    def test_resolve_from_data(self):
        ds = cluster_dataset(seed=1)
        spec = BolsteringSpec().resolve(ds)
        assert spec.sigmas == pytest.approx(spherical_sigmas(ds))
        diag = BolsteringSpec(family="diagonal").resolve(ds)
        assert diag.sigmas.shape == (2, ds.d)

    def test_stdev_applies_kappa(self):
        spec = BolsteringSpec(sigmas=np.array([2.0, 3.0]), kappa=1.5)
        assert spec.stdev(0) == pytest.approx(3.0)
        assert spec.stdev(1) == pytest.approx(4.5)


class TestSampleKernel:
    def test_degenerate_sigma_returns_center(self):
        spec = BolsteringSpec(sigmas=np.array([0.0, 1.0]))
        center = np.array([1.0, -2.0, 3.0])
        draws = sample_kernel(center, 0, spec, seed=4, count=50)
        assert np.array_equal(draws, np.tile(center, (50, 1)))

    def test_deterministic(self):
        spec = BolsteringSpec(sigmas=np.array([1.0, 1.0]))
        a = sample_kernel(np.zeros(3), 0, spec, seed=9)
        b = sample_kernel(np.zeros(3), 0, spec, seed=9)
        assert np.array_equal(a, b)

    def test_moment_oracle(self):
        spec = BolsteringSpec(sigmas=np.array([2.0, 1.0]))
        center = np.array([1.0, -1.0])
        draws = sample_kernel(center, 0, spec, seed=21, count=1_000_000)
        assert np.abs(draws.mean(axis=0) - center).max() < 0.01
        assert np.abs(draws.std(axis=0) - 2.0).max() < 0.01

    def test_kappa_is_pure_scale(self):
        base = BolsteringSpec(sigmas=np.array([2.0, 1.0]), kappa=1.0)
        doubled = BolsteringSpec(sigmas=np.array([2.0, 1.0]), kappa=2.0)
        center = np.array([5.0, 5.0])
        a = sample_kernel(center, 0, base, seed=3, count=100)
        b = sample_kernel(center, 0, doubled, seed=3, count=100)
        assert b - center == pytest.approx(2.0 * (a - center), rel=1e-12)

    def test_median_distance_matches_mean_min_distance(self):
        # the defining property of the width selection rule
        ds = cluster_dataset(seed=13, n=60, d=4)
        spec = BolsteringSpec().resolve(ds)
        target = mean_min_distance(ds, 0)
        draws = sample_kernel(ds.features[0], 0, spec, seed=5, count=1_000_000)
        median_dist = float(np.median(np.linalg.norm(draws - ds.features[0], axis=1)))
        assert median_dist == pytest.approx(target, rel=0.01)

    def test_diagonal_per_coordinate_stdev(self):
        sig = np.array([[0.5, 2.0], [1.0, 1.0]])
        spec = BolsteringSpec(family="diagonal", sigmas=sig)
        draws = sample_kernel(np.zeros(2), 0, spec, seed=6, count=200_000)
        assert draws.std(axis=0) == pytest.approx([0.5, 2.0], abs=0.01)


class TestHalfspaceMass:
    def spec(self, sigma0=1.0, sigma1=1.0, kappa=1.0):
        return BolsteringSpec(sigmas=np.array([sigma0, sigma1]), kappa=kappa)

    def test_center_on_hyperplane(self):
        a, b = np.array([1.0, 1.0]), -2.0
        center = np.array([1.0, 1.0])
        assert halfspace_mass(center, 0, self.spec(), a, b, side=1) == pytest.approx(0.5)
        assert halfspace_mass(center, 0, self.spec(), a, b, side=-1) == pytest.approx(0.5)

    def test_point_mass_limit(self):
        a, b = np.array([1.0, 0.0]), 0.0
        inside = np.array([2.0, 0.0])
        assert halfspace_mass(inside, 0, self.spec(sigma0=0.0), a, b, side=1) == 1.0
        assert halfspace_mass(inside, 0, self.spec(sigma0=0.0), a, b, side=-1) == 0.0
        boundary = np.array([0.0, 3.0])
        assert halfspace_mass(boundary, 0, self.spec(sigma0=0.0), a, b, side=1) == 0.0

    def test_monte_carlo_oracle(self):
        rng = np.random.default_rng(17)
        m = 1_000_000
        for trial in range(5):
            d = int(rng.integers(1, 5))
            center = rng.normal(size=d)
            a = rng.normal(size=d)
            b = float(rng.normal())
            sigma = float(rng.uniform(0.2, 2.0))
            kappa = float(rng.uniform(0.5, 2.0))
            spec = BolsteringSpec(sigmas=np.array([sigma, sigma]), kappa=kappa)
            p = halfspace_mass(center, 0, spec, a, b, side=1)
            draws = sample_kernel(center, 0, spec, seed=100 + trial, count=m)
            mc = float(((draws @ a + b) > 0).mean())
            tol = 3 * math.sqrt(max(p * (1 - p), 1e-12) / m)
            assert abs(p - mc) <= max(tol, 1e-4)

    def test_sides_sum_to_one_off_boundary(self):
        rng = np.random.default_rng(23)
        for _ in range(100):
            d = int(rng.integers(1, 6))
            center, a = rng.normal(size=d), rng.normal(size=d)
            b = float(rng.normal())
            spec = BolsteringSpec(sigmas=np.array([rng.uniform(0.1, 3.0)] * 2))
            total = halfspace_mass(center, 0, spec, a, b, 1) + halfspace_mass(
                center, 0, spec, a, b, -1
            )
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_scale_invariance_of_hyperplane(self):
        rng = np.random.default_rng(29)
        for _ in range(100):
            center, a = rng.normal(size=3), rng.normal(size=3)
            b = float(rng.normal())
            lam = float(rng.uniform(0.01, 100.0))
            spec = BolsteringSpec(sigmas=np.array([0.7, 0.7]))
            assert halfspace_mass(center, 0, spec, a, b, 1) == pytest.approx(
                halfspace_mass(center, 0, spec, lam * a, lam * b, 1), abs=1e-12
            )

    def test_diagonal_family_scale(self):
        # mass depends on sqrt(sum a_k^2 sigma_k^2); check vs a spherical
        # equivalent built coordinate-wise
        a = np.array([2.0, 0.0])
        spec = BolsteringSpec(family="diagonal", sigmas=np.array([[0.5, 9.0], [1.0, 1.0]]))
        center = np.array([0.3, 100.0])
        expected = normal_cdf((a @ center) / (2.0 * 0.5))
        assert halfspace_mass(center, 0, spec, a, 0.0, 1) == pytest.approx(expected)

    def test_zero_normal_rejected(self):
        with pytest.raises(ValueError):
            halfspace_mass(np.zeros(2), 0, self.spec(), np.zeros(2), 1.0, 1)


def test_chi_median_runtime_under_a_second():
    start = time.perf_counter()
    for d in range(1, 6):
        chi_median(d)
    assert time.perf_counter() - start < 1.0
