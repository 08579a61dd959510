"""Repeated-trial evaluation of estimator accuracy and speed.

Each trial draws a fresh training sample from the synthetic model, trains
the classifier once, scores every configured estimator, and approximates
the true error on a large independent sample.  Deviation statistics (bias,
deviation variance, RMS and the five basic moments) are aggregated with
population (divide-by-T) variances so that RMS^2 = bias^2 + Var_dev holds
as an exact identity.

Per-trial seeds are derived from the master seed and the (n, trial, role)
path, so serial and parallel execution produce identical aggregates.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .calibration import CalibrationSpec, calibrate_kappa
from .classifiers import Classifier, TrainingConfig, train
from .dataset import LabeledDataset, SyntheticModelSpec, generate_synthetic
from .estimators import (
    BolsteringSpec,
    ErrorEstimate,
    PosteriorSpec,
    ResamplingSpec,
    bolstered_posterior_resub,
    bolstered_resub,
    bootstrap_zero,
    cross_validation,
    knn_posterior_resub,
    resubstitution,
    semi_bolstered_resub,
    test_set,
)
from .exceptions import InvalidSpecError
from .seeding import derive_seed

ESTIMATOR_IDS = (
    "resub",
    "bolster",
    "semi_bolster",
    "knnpp",
    "bolster_knnpp",
    "cv",
    "boot0",
    "testset",
)


@dataclass(frozen=True)
class DeviationStats:
    """Moments of the deviation distribution (estimate - true error)."""

    bias: float
    deviation_variance: float
    rms: float
    mean_true_error: float
    mean_estimate: float
    var_true_error: float
    var_estimate: float
    covariance: float
    trials: int
    mean_internal_variance: Optional[float] = None

    @staticmethod
    def from_trials(
        estimates, true_errors, internal_variances=None
    ) -> "DeviationStats":
        est = np.asarray(estimates, dtype=np.float64)
        true = np.asarray(true_errors, dtype=np.float64)
        if est.shape != true.shape or est.ndim != 1 or est.shape[0] < 2:
            raise InvalidSpecError("need matched 1-D arrays with at least 2 trials")
        dev = est - true
        bias = float(dev.mean())
        dev_var = float(dev.var())  # population convention
        rms = math.sqrt(float((dev * dev).mean()))
        return DeviationStats(
            bias=bias,
            deviation_variance=dev_var,
            rms=rms,
            mean_true_error=float(true.mean()),
            mean_estimate=float(est.mean()),
            var_true_error=float(true.var()),
            var_estimate=float(est.var()),
            covariance=float(((est - est.mean()) * (true - true.mean())).mean()),
            trials=est.shape[0],
            mean_internal_variance=(
                float(np.mean(internal_variances)) if internal_variances is not None else None
            ),
        )


def true_error(clf: Classifier, model: SyntheticModelSpec, m: int, seed: int) -> float:
    """Misclassification fraction on m fresh draws from the model
    (standard error at most 0.5/sqrt(m))."""
    if m < 1:
        raise ValueError("test size m must be >= 1")
    if m < 2:
        m_ds = generate_synthetic(model, 2, seed)
        return float((clf.predict(m_ds.features[:1]) != m_ds.labels[:1]).mean())
    ds = generate_synthetic(model, m, seed)
    return float((clf.predict(ds.features) != ds.labels).mean())


def markov_check(stats: DeviationStats, tau: float) -> float:
    """Markov bound (RMS / tau)^2 on P(|estimate - true| >= tau)."""
    if tau <= 0:
        raise ValueError("tau must be > 0")
    return (stats.rms / tau) ** 2


def internal_variance(run_with_seed, seeds) -> tuple[float, bool]:
    """Sample variance (ddof=1) of a randomized estimator across seeds on
    fixed inputs.  Returns (variance, randomized); nonrandomized estimators
    report (0.0, False) without further runs."""
    seeds = list(seeds)
    if len(seeds) < 2:
        raise ValueError("need at least 2 seeds")
    first = run_with_seed(seeds[0])
    if not first.randomized:
        return 0.0, False
    values = [first.value] + [run_with_seed(s).value for s in seeds[1:]]
    return float(np.var(values, ddof=1)), True


# ---------------------------------------------------------------------------
# experiment configuration


@dataclass(frozen=True)
class EstimatorConfig:
    """One estimator entry in an experiment, with its hyperparameters."""

    name: str
    kernel: str = "spherical"
    kappa: float = 1.0
    mc_samples: int = 100
    k: int = 3
    folds: int = 10
    replicates: int = 100
    test_size: int = 5000
    calibrate_r: int = 0  # >0: tune kappa per trial (bolster only)
    calibration: Optional[CalibrationSpec] = None
    label: Optional[str] = None

    def __post_init__(self):
        if self.name not in ESTIMATOR_IDS:
            raise InvalidSpecError(
                f"unknown estimator {self.name!r}; expected one of {ESTIMATOR_IDS}"
            )
        if self.calibrate_r > 0 and self.name != "bolster":
            raise InvalidSpecError("calibration applies to the bolster estimator only")

    @property
    def display(self) -> str:
        if self.label:
            return self.label
        return f"{self.name}_cal" if self.calibrate_r > 0 else self.name

    def _bolstering(self, kappa: Optional[float] = None) -> BolsteringSpec:
        return BolsteringSpec(
            family=self.kernel,
            kappa=self.kappa if kappa is None else kappa,
            mc_samples=self.mc_samples,
        )

    def run(
        self,
        clf: Classifier,
        ds: LabeledDataset,
        config: TrainingConfig,
        seed: int,
        model: Optional[SyntheticModelSpec] = None,
    ) -> ErrorEstimate:
        """Evaluate this estimator for one trained classifier and sample."""
        if self.name == "resub":
            return resubstitution(clf, ds)
        if self.name == "bolster":
            kappa = None
            if self.calibrate_r > 0:
                base = self.calibration or CalibrationSpec()
                cspec = replace(
                    base, repetitions=self.calibrate_r, seed=derive_seed(seed, "cal")
                )
                kappa = calibrate_kappa(config, ds, self._bolstering(), cspec).kappa
            return bolstered_resub(clf, ds, self._bolstering(kappa), derive_seed(seed, "mc"))
        if self.name == "semi_bolster":
            return semi_bolstered_resub(clf, ds, self._bolstering(), derive_seed(seed, "mc"))
        if self.name == "knnpp":
            return knn_posterior_resub(clf, ds, PosteriorSpec(self.k))
        if self.name == "bolster_knnpp":
            return bolstered_posterior_resub(
                clf, ds, self._bolstering(), PosteriorSpec(self.k), derive_seed(seed, "mc")
            )
        if self.name == "cv":
            return cross_validation(
                config, ds, ResamplingSpec(folds=self.folds, seed=derive_seed(seed, "cv"))
            )
        if self.name == "boot0":
            return bootstrap_zero(
                config,
                ds,
                ResamplingSpec(replicates=self.replicates, seed=derive_seed(seed, "boot")),
            )
        if model is None:
            raise InvalidSpecError("testset estimator needs a generating model")
        draw = generate_synthetic(model, self.test_size, derive_seed(seed, "testset"))
        return test_set(clf, draw)


@dataclass(frozen=True)
class ExperimentSpec:
    """Full benchmark description: model, rule, estimators, trial grid."""

    model: SyntheticModelSpec
    config: TrainingConfig
    estimators: tuple[EstimatorConfig, ...]
    sample_sizes: tuple[int, ...]
    trials: int = 200
    test_size: int = 5000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "estimators", tuple(self.estimators))
        object.__setattr__(self, "sample_sizes", tuple(int(n) for n in self.sample_sizes))
        if self.trials < 2:
            raise InvalidSpecError("need at least 2 trials")
        if self.test_size < 1:
            raise InvalidSpecError("test_size must be >= 1")
        if not self.sample_sizes:
            raise InvalidSpecError("sample_sizes must be nonempty")
        seen = set()
        for est in self.estimators:
            if est.display in seen:
                raise InvalidSpecError(f"duplicate estimator label {est.display!r}")
            seen.add(est.display)


@dataclass
class TrialOutcome:
    n: int
    trial: int
    true_error: float
    # display name -> (value or None on failure, elapsed ms, failure message)
    estimates: dict


@dataclass
class EstimatorTrialRecord:
    """All trials of one estimator at one sample size."""

    estimator: str
    n: int
    estimates: np.ndarray
    true_errors: np.ndarray
    times_ms: np.ndarray
    failures: int = 0
    failure_messages: tuple[str, ...] = ()

    def stats(self) -> DeviationStats:
        return DeviationStats.from_trials(self.estimates, self.true_errors)

    def median_ms(self) -> float:
        return float(np.median(self.times_ms))

    def tail_frequency(self, tau: float) -> float:
        """Empirical P(|estimate - true error| >= tau) over trials."""
        return float((np.abs(self.estimates - self.true_errors) >= tau).mean())


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    records: dict  # (display name, n) -> EstimatorTrialRecord

    def stats(self) -> dict:
        return {key: rec.stats() for key, rec in self.records.items()}

    def write_stats_csv(self, path) -> None:
        cols = [
            "estimator",
            "n",
            "bias",
            "var_dev",
            "rms",
            "mean_true_error",
            "mean_estimate",
            "var_true_error",
            "var_estimate",
            "covariance",
            "T_effective",
        ]
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(cols)
            for (name, n), rec in sorted(self.records.items(), key=lambda kv: (kv[0][1], kv[0][0])):
                if rec.estimates.shape[0] < 2:  # not enough surviving trials
                    writer.writerow([name, n] + [repr(float("nan"))] * 8 + [rec.estimates.shape[0]])
                    continue
                s = rec.stats()
                writer.writerow(
                    [
                        name,
                        n,
                        repr(s.bias),
                        repr(s.deviation_variance),
                        repr(s.rms),
                        repr(s.mean_true_error),
                        repr(s.mean_estimate),
                        repr(s.var_true_error),
                        repr(s.var_estimate),
                        repr(s.covariance),
                        s.trials,
                    ]
                )

    def write_timing_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["estimator", "classifier", "n", "median_ms"])
            for (name, n), rec in sorted(self.records.items(), key=lambda kv: (kv[0][1], kv[0][0])):
                writer.writerow([name, self.spec.config.rule, n, repr(rec.median_ms())])

    def timing_summary(self) -> list[tuple[str, int, float]]:
        rows = [
            (name, n, rec.median_ms())
            for (name, n), rec in sorted(self.records.items(), key=lambda kv: (kv[0][1], kv[0][0]))
        ]
        return rows


def _run_trial(spec: ExperimentSpec, n: int, t: int) -> TrialOutcome:
    ds = generate_synthetic(spec.model, n, derive_seed(spec.seed, "data", n, t))
    config = replace(spec.config, seed=derive_seed(spec.seed, "train", n, t))
    clf = train(config, ds)
    truth = true_error(clf, spec.model, spec.test_size, derive_seed(spec.seed, "truth", n, t))
    estimates = {}
    for est in spec.estimators:
        est_seed = derive_seed(spec.seed, "estimator", est.display, n, t)
        started = time.perf_counter()
        try:
            value = est.run(clf, ds, config, est_seed, model=spec.model).value
            message = None
        except (ValueError, RuntimeError) as exc:
            value = None
            message = f"{type(exc).__name__}: {exc}"
        elapsed_ms = (time.perf_counter() - started) * 1e3
        estimates[est.display] = (value, elapsed_ms, message)
    return TrialOutcome(n, t, truth, estimates)


def _trial_star(args) -> TrialOutcome:
    return _run_trial(*args)


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> ExperimentResult:
    """Run the full trial grid; aggregates are deterministic given
    ``spec.seed`` regardless of ``workers`` (timings are not)."""
    tasks = [(spec, n, t) for n in spec.sample_sizes for t in range(spec.trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_trial_star, tasks, chunksize=max(1, len(tasks) // (workers * 8))))
    else:
        outcomes = [_run_trial(*task) for task in tasks]

    records = {}
    for est in spec.estimators:
        for n in spec.sample_sizes:
            values, truths, times, messages = [], [], [], []
            for outcome in outcomes:
                if outcome.n != n:
                    continue
                value, elapsed, message = outcome.estimates[est.display]
                times.append(elapsed)
                if value is None:
                    messages.append(f"trial {outcome.trial}: {message}")
                else:
                    values.append(value)
                    truths.append(outcome.true_error)
            records[(est.display, n)] = EstimatorTrialRecord(
                estimator=est.display,
                n=n,
                estimates=np.array(values),
                true_errors=np.array(truths),
                times_ms=np.array(times),
                failures=len(messages),
                failure_messages=tuple(messages),
            )
    return ExperimentResult(spec, records)
