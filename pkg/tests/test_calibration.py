import numpy as np
import pytest

from errest import (
    BolsteringSpec,
    CalibrationSpec,
    InvalidSpecError,
    LabeledDataset,
    TrainingConfig,
    calibrate_kappa,
    default_synthetic_model,
    generate_synthetic,
    make_rng,
    repetition_seed,
    rough_bias,
    rough_bias_single,
    search_kappa,
)

LADDER = [round(1.0 + 0.1 * i, 10) for i in range(0, 91)]


def separable_fixture(seed=0, n=40):
    """Tight same-class clusters far from the boundary: every bolstered
    mass and every holdout error is exactly zero."""
    rng = make_rng(seed)
    x0 = rng.normal(size=(n // 2, 2)) * 0.01 - 50.0
    x1 = rng.normal(size=(n // 2, 2)) * 0.01 + 50.0
    features = np.vstack([x0, x1])
    labels = np.array([0] * (n // 2) + [1] * (n // 2))
    return LabeledDataset(features, labels, 2)


class TestCalibrationSpec:
    def test_validation(self):
        with pytest.raises(InvalidSpecError):
            CalibrationSpec(repetitions=0)
        with pytest.raises(InvalidSpecError):
            CalibrationSpec(holdout_fraction=1.0)
        with pytest.raises(InvalidSpecError):
            CalibrationSpec(step=0.0)
        with pytest.raises(InvalidSpecError):
            CalibrationSpec(patience=0)
        with pytest.raises(InvalidSpecError):
            CalibrationSpec(kappa_cap=0.5)


class TestSearchKappa:
    def test_immediate_stop_returns_start(self):
        profile = {1.0: 0.001, 1.1: 0.01, 1.2: 0.02}
        result = search_kappa(lambda k: profile[round(k, 10)], patience=2)
        assert result.kappa == 1.0
        assert [round(k, 10) for k, _ in result.visited] == [1.0, 1.1, 1.2]
        assert not result.truncated

    def test_patience_resets_on_improvement(self):
        profile = {1.0: 0.05, 1.1: 0.06, 1.2: 0.03, 1.3: 0.01, 1.4: 0.02, 1.5: 0.04}
        result = search_kappa(lambda k: profile[round(k, 10)], patience=2)
        assert result.kappa == pytest.approx(1.3)
        assert len(result.visited) == 6

    def test_monotone_profile_truncates_at_cap(self):
        result = search_kappa(lambda k: 1.0 / k, patience=2, cap=10.0)
        assert result.kappa == pytest.approx(10.0)
        assert result.truncated
        assert len(result.visited) == 91  # 1.0 through 10.0

    def test_best_seen_wins_over_last_tested(self):
        profile = {1.0: 0.10, 1.1: 0.02, 1.2: 0.05, 1.3: 0.07}
        result = search_kappa(lambda k: profile[round(k, 10)], patience=2)
        # 1.2 and 1.3 each fail to beat their predecessor, firing the stop;
        # the best remains 1.1 even though 1.3 was tested last
        assert result.kappa == pytest.approx(1.1)

    def test_downward_branch_on_pessimistic_start(self):
        result = search_kappa(
            lambda k: k, patience=2, allow_downward=True
        )  # positive bias, shrinking kappa shrinks it
        assert result.direction == "down"
        assert result.kappa == pytest.approx(0.1)  # floored at step
        assert result.truncated

    def test_downward_disabled_by_default(self):
        result = search_kappa(lambda k: k, patience=2)
        assert result.direction == "up"
        assert result.kappa == 1.0

    def test_negative_bias_never_searches_down(self):
        result = search_kappa(lambda k: -0.5 + 0.01 * k, patience=2, allow_downward=True)
        assert result.direction == "up"


class TestRoughBias:
    def test_zero_on_separable_far_margin_fixture(self):
        ds = separable_fixture()
        value = rough_bias(
            TrainingConfig("linear-svm"),
            ds,
            BolsteringSpec(),
            CalibrationSpec(seed=3),
            kappa=1.0,
        )
        assert value == 0.0

    def test_repetitions_decompose(self):
        ds = generate_synthetic(default_synthetic_model(), 60, seed=4)
        config = TrainingConfig("linear-svm")
        bspec = BolsteringSpec()
        cspec = CalibrationSpec(repetitions=5, seed=5)
        combined = rough_bias(config, ds, bspec, cspec, kappa=1.2)
        singles = [
            rough_bias_single(
                config, ds, bspec, cspec.holdout_fraction, 1.2, repetition_seed(5, r)
            )
            for r in range(5)
        ]
        assert combined == pytest.approx(float(np.mean(singles)), abs=1e-15)

    def test_point_mass_kappa_recovers_resub_optimism(self):
        ds = generate_synthetic(default_synthetic_model(), 200, seed=6)
        value = rough_bias(
            TrainingConfig("linear-svm"),
            ds,
            BolsteringSpec(),
            CalibrationSpec(repetitions=3, seed=7),
            kappa=0.0,
        )
        assert value < 0.0

    def test_negative_kappa_rejected(self):
        ds = separable_fixture()
        with pytest.raises(ValueError):
            rough_bias(
                TrainingConfig("linear-svm"), ds, BolsteringSpec(), CalibrationSpec(), -0.1
            )

    def test_infeasible_split_rejected(self):
        ds = LabeledDataset(np.array([[0.0], [1.0], [9.0], [10.0]]), np.array([0, 0, 1, 1]), 2)
        with pytest.raises(ValueError):
            rough_bias(
                TrainingConfig("knn", k=1), ds, BolsteringSpec(), CalibrationSpec(), 1.0
            )


class TestCalibrateKappa:
    def test_separable_fixture_stops_at_one(self):
        ds = separable_fixture(seed=8)
        result = calibrate_kappa(
            TrainingConfig("linear-svm"), ds, BolsteringSpec(), CalibrationSpec(seed=9)
        )
        assert result.kappa == 1.0
        assert len(result.visited) == 3  # start plus `patience` non-improving steps

    def test_deterministic_given_seed(self):
        ds = generate_synthetic(default_synthetic_model(), 50, seed=10)
        config = TrainingConfig("linear-svm")
        a = calibrate_kappa(config, ds, BolsteringSpec(), CalibrationSpec(seed=11))
        b = calibrate_kappa(config, ds, BolsteringSpec(), CalibrationSpec(seed=11))
        assert a == b

    def test_grid_independent_of_repetitions(self):
        ds = generate_synthetic(default_synthetic_model(), 50, seed=12)
        config = TrainingConfig("linear-svm")
        for reps in (1, 3):
            result = calibrate_kappa(
                config, ds, BolsteringSpec(), CalibrationSpec(repetitions=reps, seed=13)
            )
            ladder_prefix = LADDER[: len(result.visited)]
            assert [round(k, 10) for k, _ in result.visited] == ladder_prefix
            assert result.kappa > 0

    def test_visited_biases_are_logged(self):
        ds = generate_synthetic(default_synthetic_model(), 50, seed=14)
        result = calibrate_kappa(
            TrainingConfig("linear-svm"), ds, BolsteringSpec(), CalibrationSpec(seed=15)
        )
        assert all(isinstance(b, float) for _, b in result.visited)
        assert any(k == 1.0 for k, _ in result.visited)
