"""Data-driven tuning of the kernel width multiplier kappa.

The bolstered estimator's bias is roughly estimated by holding out a
fraction of the data: train on the rest, compare the bolstered estimate on
the training part against the held-out error.  Kappa starts at 1 and moves
in fixed steps until the rough bias magnitude stops improving for
``patience`` consecutive steps; the best kappa seen is returned.

The sweep direction is upward (matching an optimistic starting bias).  An
optional downward branch handles the pessimistic case; it is off by
default.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .classifiers import TrainingConfig, train
from .dataset import LabeledDataset
from .estimators import bolstered_resub, test_set
from .kernels import BolsteringSpec, diagonal_sigmas, spherical_sigmas
from .exceptions import InvalidSpecError
from .seeding import derive_seed, make_rng


@dataclass(frozen=True)
class CalibrationSpec:
    """Rough-bias estimation and kappa search settings."""

    repetitions: int = 1
    holdout_fraction: float = 0.2
    step: float = 0.1
    patience: int = 2
    kappa_cap: float = 10.0
    allow_downward: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.repetitions < 1:
            raise InvalidSpecError("repetitions must be >= 1")
        if not 0.0 < self.holdout_fraction < 1.0:
            raise InvalidSpecError("holdout_fraction must lie in (0, 1)")
        if self.step <= 0:
            raise InvalidSpecError("step must be > 0")
        if self.patience < 1:
            raise InvalidSpecError("patience must be >= 1")
        if self.kappa_cap < 1.0:
            raise InvalidSpecError("kappa_cap must be >= 1")


@dataclass(frozen=True)
class CalibrationResult:
    kappa: float
    visited: tuple[tuple[float, float], ...]  # (kappa, rough bias) in sweep order
    truncated: bool
    direction: str


def _stratified_split(ds: LabeledDataset, fraction: float, rng: np.random.Generator):
    """Hold out ~fraction of each class, always keeping >= 2 training points
    per class so kernel widths stay computable."""
    train_idx: list[np.ndarray] = []
    hold_idx: list[np.ndarray] = []
    for j in range(ds.class_count):
        idx = rng.permutation(ds.class_indices(j))
        n_j = idx.shape[0]
        h = min(max(n_j - 2, 0), max(1, round(fraction * n_j)) if n_j > 2 else 0)
        hold_idx.append(idx[:h])
        train_idx.append(idx[h:])
    hold = np.concatenate(hold_idx)
    if hold.shape[0] == 0:
        raise ValueError("holdout split infeasible: too few points per class")
    return np.sort(np.concatenate(train_idx)), np.sort(hold)


class _Repetition:
    """One holdout repetition with everything kappa-independent cached."""

    def __init__(self, config, ds, bspec, fraction, seed):
        rng = make_rng(derive_seed(seed, "split"))
        train_idx, hold_idx = _stratified_split(ds, fraction, rng)
        self.subset = ds.subset(train_idx)
        self.classifier = train(config, self.subset)
        self.holdout_error = test_set(self.classifier, ds.subset(hold_idx)).value
        sigma_fn = spherical_sigmas if bspec.family == "spherical" else diagonal_sigmas
        self.base_sigmas = sigma_fn(self.subset)
        self.bspec = bspec
        self.mc_seed = derive_seed(seed, "mc")

    def bias_at(self, kappa: float) -> float:
        # kappa folded into the sigmas so kappa=0 (exact resubstitution
        # limit) stays expressible
        spec = replace(self.bspec, sigmas=self.base_sigmas * kappa, kappa=1.0)
        est = bolstered_resub(self.classifier, self.subset, spec, seed=self.mc_seed)
        return est.value - self.holdout_error


def repetition_seed(seed: int, r: int) -> int:
    """Seed of the r-th holdout repetition under master ``seed``."""
    return derive_seed(seed, "rep", r)


def _repetitions(config, ds, bspec, cspec) -> list[_Repetition]:
    return [
        _Repetition(
            config,
            ds,
            bspec,
            cspec.holdout_fraction,
            repetition_seed(cspec.seed, r),
        )
        for r in range(cspec.repetitions)
    ]


def rough_bias_single(
    config: TrainingConfig,
    ds: LabeledDataset,
    bspec: BolsteringSpec,
    holdout_fraction: float,
    kappa: float,
    seed: int,
) -> float:
    """One holdout repetition of the rough bias at multiplier kappa."""
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    return _Repetition(config, ds, bspec, holdout_fraction, seed).bias_at(kappa)


def rough_bias(
    config: TrainingConfig,
    ds: LabeledDataset,
    bspec: BolsteringSpec,
    cspec: CalibrationSpec,
    kappa: float,
) -> float:
    """Holdout-estimated bias of the bolstered estimator at multiplier kappa.

    Averages ``repetitions`` single-repetition evaluations whose seeds are
    ``repetition_seed(cspec.seed, r)``; the kernel widths are recomputed on
    each training subset (any sigmas carried by ``bspec`` are ignored, as
    is its own kappa — the explicit argument rules).
    """
    if kappa < 0:
        raise ValueError("kappa must be >= 0")
    reps = _repetitions(config, ds, bspec, cspec)
    return float(np.mean([rep.bias_at(kappa) for rep in reps]))


def search_kappa(
    bias_at: Callable[[float], float],
    start: float = 1.0,
    step: float = 0.1,
    patience: int = 2,
    cap: float = 10.0,
    allow_downward: bool = False,
) -> CalibrationResult:
    """Step kappa away from ``start`` until |bias| stops improving for
    ``patience`` consecutive steps; return the best kappa visited.

    The grid is start, start+step, ... (or downward, floored at ``step``,
    when ``allow_downward`` and the starting bias is positive).  Hitting
    the grid end sets ``truncated``.
    """
    bias0 = bias_at(start)
    visited = [(start, bias0)]
    direction = "down" if (allow_downward and bias0 > 0) else "up"
    best_kappa, best_abs = start, abs(bias0)
    prev_abs = abs(bias0)
    bad = 0
    truncated = True  # flipped off if the patience rule fires first
    i = 1
    while True:
        kappa = start + i * step if direction == "up" else start - i * step
        if direction == "up" and kappa > cap + 1e-12:
            break
        if direction == "down" and kappa < step - 1e-12:
            break
        bias = bias_at(kappa)
        visited.append((kappa, bias))
        if abs(bias) < best_abs:
            best_kappa, best_abs = kappa, abs(bias)
        bad = bad + 1 if abs(bias) >= prev_abs else 0
        prev_abs = abs(bias)
        if bad >= patience:
            truncated = False
            break
        i += 1
    return CalibrationResult(best_kappa, tuple(visited), truncated, direction)


def calibrate_kappa(
    config: TrainingConfig,
    ds: LabeledDataset,
    bspec: BolsteringSpec,
    cspec: CalibrationSpec,
) -> CalibrationResult:
    """Run the kappa sweep on rough holdout bias; deterministic given
    ``cspec.seed``.

    The holdout splits and retrained classifiers are shared across the
    sweep (they do not depend on kappa), so the visited grid is identical
    for any repetition count.
    """
    reps = _repetitions(config, ds, bspec, cspec)

    def bias_at(kappa: float) -> float:
        return float(np.mean([rep.bias_at(kappa) for rep in reps]))

    return search_kappa(
        bias_at,
        start=1.0,
        step=cspec.step,
        patience=cspec.patience,
        cap=cspec.kappa_cap,
        allow_downward=cspec.allow_downward,
    )
