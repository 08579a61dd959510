"""Classification error estimators.

Every estimator consumes a trained classifier and/or the training data and
returns an :class:`ErrorEstimate` in [0, 1].  The resubstitution family
(plain, bolstered, semi-bolstered, kNN posterior-probability, bolstered
posterior-probability) never retrains the classifier; cross-validation and
the zero bootstrap retrain per resample; the test-set estimator scores an
independent sample.

Bolstered estimators have two evaluation paths that must agree: an exact
closed form (two-class linear classifiers: the Gaussian kernel mass of the
misclassifying half-space) and Monte-Carlo integration (everything else).
The per-point misclassification mass for label y and signed margin m under
kernel scale s is Phi(-(2y-1) * m / s): the kernel mass on the side of the
decision boundary that disagrees with y.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .classifiers import Classifier, TrainingConfig, train
from .dataset import LabeledDataset
from .exceptions import EstimationFailedError, InvalidSpecError
from .kernels import BolsteringSpec, normal_cdf, sample_kernel
from .seeding import derive_seed, make_rng


@dataclass(frozen=True)
class ErrorEstimate:
    """Scalar error estimate plus provenance."""

    value: float
    estimator_id: str
    hyperparams: dict = field(default_factory=dict)
    randomized: bool = False
    seed: Optional[int] = None
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise InvalidSpecError(f"estimate {self.value} outside [0, 1]")


@dataclass(frozen=True)
class PosteriorSpec:
    """kNN posterior-probability smoothing: neighbor count k."""

    k: int = 3

    def __post_init__(self):
        if self.k < 1:
            raise InvalidSpecError("k must be >= 1")


@dataclass(frozen=True)
class ResamplingSpec:
    """Cross-validation fold count / bootstrap replicate count plus seed."""

    folds: int = 10
    replicates: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.folds < 2:
            raise InvalidSpecError("folds must be >= 2")
        if self.replicates < 1:
            raise InvalidSpecError("replicates must be >= 1")


# ---------------------------------------------------------------------------
# resubstitution family


def resubstitution(clf: Classifier, ds: LabeledDataset) -> ErrorEstimate:
    """Misclassification fraction on the training data itself."""
    value = float((clf.predict(ds.features) != ds.labels).mean())
    return ErrorEstimate(value, "resub")


def _has_exact_path(clf: Classifier, ds: LabeledDataset) -> bool:
    return clf.linear_form is not None and ds.class_count == 2


def _exact_point_masses(clf: Classifier, ds: LabeledDataset, spec: BolsteringSpec) -> np.ndarray:
    """Per-point misclassification kernel masses for a two-class linear
    classifier, computed exactly."""
    a, b = clf.linear_form
    margins = ds.features @ a + b
    err_sign = 1.0 - 2.0 * ds.labels  # +1 for class 0, -1 for class 1
    if spec.family == "spherical":
        scales = spec.kappa * np.asarray(spec.sigmas)[ds.labels] * float(np.linalg.norm(a))
    else:
        per_class = np.sqrt(((np.asarray(spec.sigmas) * spec.kappa) ** 2 @ (a * a)))
        scales = per_class[ds.labels]
    masses = np.empty(ds.n)
    degenerate = scales == 0.0
    masses[degenerate] = (err_sign[degenerate] * margins[degenerate] > 0).astype(float)
    ok = ~degenerate
    masses[ok] = normal_cdf(err_sign[ok] * margins[ok] / scales[ok])
    return masses


def _mc_point_masses(
    clf: Classifier, ds: LabeledDataset, spec: BolsteringSpec, seed: int
) -> np.ndarray:
    """Per-point misclassified fraction of kernel draws (M per point)."""
    masses = np.empty(ds.n)
    for i in range(ds.n):
        draws = sample_kernel(
            ds.features[i], int(ds.labels[i]), spec, derive_seed(seed, "point", i)
        )
        masses[i] = float((clf.predict(draws) != ds.labels[i]).mean())
    return masses


def _bolster_masses(clf, ds, spec, seed, estimator_id):
    """(masses, randomized) on the exact path when available, else MC."""
    spec = spec.resolve(ds)
    if _has_exact_path(clf, ds):
        return _exact_point_masses(clf, ds, spec), False
    if seed is None:
        raise ValueError(f"{estimator_id}: Monte-Carlo path needs an explicit seed")
    return _mc_point_masses(clf, ds, spec, seed), True


def _bolster_params(spec: BolsteringSpec, randomized: bool) -> dict:
    params = {"kernel": spec.family, "kappa": spec.kappa}
    if randomized:
        params["mc_samples"] = spec.mc_samples
    return params


def bolstered_resub(
    clf: Classifier,
    ds: LabeledDataset,
    spec: BolsteringSpec,
    seed: Optional[int] = None,
) -> ErrorEstimate:
    """Bolstered resubstitution: each training point contributes its kernel
    mass over the region the classifier assigns to other classes."""
    masses, randomized = _bolster_masses(clf, ds, spec, seed, "bolster")
    return ErrorEstimate(
        float(masses.mean()),
        "bolster",
        _bolster_params(spec, randomized),
        randomized=randomized,
        seed=seed if randomized else None,
    )


def semi_bolstered_resub(
    clf: Classifier,
    ds: LabeledDataset,
    spec: BolsteringSpec,
    seed: Optional[int] = None,
) -> ErrorEstimate:
    """Bolstering restricted to correctly classified points; misclassified
    points keep their full unit contribution."""
    masses, randomized = _bolster_masses(clf, ds, spec, seed, "semi_bolster")
    wrong = clf.predict(ds.features) != ds.labels
    contributions = np.where(wrong, 1.0, masses)
    return ErrorEstimate(
        float(contributions.mean()),
        "semi_bolster",
        _bolster_params(spec, randomized),
        randomized=randomized,
        seed=seed if randomized else None,
    )


def _knn_disagreements(clf: Classifier, ds: LabeledDataset, k: int) -> np.ndarray:
    """Per-point count of the k nearest training labels (self included)
    that disagree with the classifier's prediction there."""
    from .classifiers import KNNClassifier

    if k > ds.n:
        raise ValueError(f"k={k} exceeds sample size n={ds.n}")
    finder = KNNClassifier(ds, k)
    neighbor_labels = ds.labels[finder.neighbor_indices(ds.features)]
    pred = clf.predict(ds.features)
    return (neighbor_labels != pred[:, None]).sum(axis=1)


def knn_posterior_resub(
    clf: Classifier, ds: LabeledDataset, spec: PosteriorSpec
) -> ErrorEstimate:
    """Posterior-probability resubstitution: the error indicator at each
    training point becomes the fraction of its k nearest labels that the
    classifier disagrees with.  k=1 reduces to plain resubstitution."""
    disagreements = _knn_disagreements(clf, ds, spec.k)
    value = float(disagreements.sum()) / (ds.n * spec.k)
    return ErrorEstimate(value, "knnpp", {"k": spec.k})


def bolstered_posterior_resub(
    clf: Classifier,
    ds: LabeledDataset,
    bspec: BolsteringSpec,
    pspec: PosteriorSpec,
    seed: Optional[int] = None,
) -> ErrorEstimate:
    """Smoothing in both directions: the per-point bolstered mass is
    weighted by the kNN disagreement fraction at that point."""
    masses, randomized = _bolster_masses(clf, ds, bspec, seed, "bolster_knnpp")
    disagreements = _knn_disagreements(clf, ds, pspec.k)
    value = float((masses * disagreements).sum()) / (ds.n * pspec.k)
    params = _bolster_params(bspec, randomized)
    params["k"] = pspec.k
    return ErrorEstimate(
        value,
        "bolster_knnpp",
        params,
        randomized=randomized,
        seed=seed if randomized else None,
    )


# ---------------------------------------------------------------------------
# resampling estimators and the test-set estimator


def _fold_assignment(ds: LabeledDataset, folds: int, rng: np.random.Generator) -> np.ndarray:
    """Fold index per point; stratified by class when every present class
    has at least ``folds`` points, plain random partition otherwise."""
    counts = ds.class_counts()
    present = np.flatnonzero(counts > 0)
    fold_of = np.empty(ds.n, dtype=np.int64)
    if (counts[present] >= folds).all():
        for j in present:
            idx = rng.permutation(ds.class_indices(j))
            fold_of[idx] = (np.arange(idx.shape[0]) + j) % folds
    else:
        perm = rng.permutation(ds.n)
        for f, chunk in enumerate(np.array_split(perm, folds)):
            fold_of[chunk] = f
    return fold_of


def cross_validation(
    config: TrainingConfig, ds: LabeledDataset, spec: ResamplingSpec
) -> ErrorEstimate:
    """k-fold cross-validation: average of per-fold held-out error rates
    under retraining on each fold complement."""
    if spec.folds > ds.n:
        raise ValueError(f"folds={spec.folds} exceeds sample size n={ds.n}")
    rng = make_rng(derive_seed(spec.seed, "cv-partition"))
    fold_of = _fold_assignment(ds, spec.folds, rng)
    fold_errors = []
    warnings: list[str] = []
    for f in range(spec.folds):
        held = fold_of == f
        clf = train(config, ds.subset(np.flatnonzero(~held)))
        if clf.constant_warning:
            warnings.append(f"fold {f}: training data lost a class; constant fallback")
        pred = clf.predict(ds.features[held])
        fold_errors.append(float((pred != ds.labels[held]).mean()))
    return ErrorEstimate(
        float(np.mean(fold_errors)),
        "cv",
        {"folds": spec.folds, "fold_errors": tuple(fold_errors)},
        randomized=True,
        seed=spec.seed,
        warnings=tuple(warnings),
    )


def bootstrap_zero(
    config: TrainingConfig, ds: LabeledDataset, spec: ResamplingSpec
) -> ErrorEstimate:
    """Zero bootstrap: train on each with-replacement resample, score its
    out-of-bag points, and pool error counts over replicates."""
    error_count = 0
    oob_count = 0
    skipped = 0
    for r in range(spec.replicates):
        rng = make_rng(derive_seed(spec.seed, "replicate", r))
        picked = rng.integers(0, ds.n, size=ds.n)
        oob = np.setdiff1d(np.arange(ds.n), picked)
        if oob.shape[0] == 0:
            skipped += 1
            continue
        clf = train(config, ds.subset(picked))
        pred = clf.predict(ds.features[oob])
        error_count += int((pred != ds.labels[oob]).sum())
        oob_count += oob.shape[0]
    if oob_count == 0:
        raise EstimationFailedError(
            f"all {spec.replicates} bootstrap replicate(s) had empty out-of-bag sets"
        )
    warnings = (f"{skipped} replicate(s) skipped (empty out-of-bag set)",) if skipped else ()
    return ErrorEstimate(
        error_count / oob_count,
        "boot0",
        {"replicates": spec.replicates},
        randomized=True,
        seed=spec.seed,
        warnings=warnings,
    )


def test_set(clf: Classifier, test_ds: LabeledDataset) -> ErrorEstimate:
    """Misclassification fraction on an independent test sample."""
    value = float((clf.predict(test_ds.features) != test_ds.labels).mean())
    return ErrorEstimate(value, "testset", {"m": test_ds.n})
