"""Bolstering kernels: width selection, sampling, and half-space masses.

Kernel standard deviations are chosen so that the median distance of a
kernel draw to its center matches the mean nearest-neighbor distance of
the corresponding class.  For a spherical Gaussian in d dimensions that
distance is distributed as a chi variable with d degrees of freedom, so
the conversion factor is the chi median, computed here by bisection on a
hand-rolled regularized incomplete gamma (no dependency beyond numpy).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .dataset import LabeledDataset, mean_min_coordinate_distance, mean_min_distance
from .exceptions import InvalidSpecError
from .seeding import make_rng

_SQRT2 = math.sqrt(2.0)
_GAMMA_EPS = 1e-15
_GAMMA_ITMAX = 500
_FPMIN = 1e-300


def normal_cdf(z):
    """Standard normal CDF, exact to double precision via erf.

    Accepts a scalar or a 1-D array; returns the matching shape.
    """
    if np.ndim(z) == 0:
        return 0.5 * (1.0 + math.erf(float(z) / _SQRT2))
    return np.array([0.5 * (1.0 + math.erf(float(v) / _SQRT2)) for v in np.asarray(z)])


def _gamma_series(a: float, x: float) -> float:
    # lower regularized incomplete gamma by series, valid for x < a+1
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_GAMMA_ITMAX):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _GAMMA_EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cf(a: float, x: float) -> float:
    # upper regularized incomplete gamma by continued fraction (modified
    # Lentz), valid for x >= a+1
    b = x + 1.0 - a
    c = 1.0 / _FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _GAMMA_ITMAX + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _FPMIN:
            d = _FPMIN
        c = b + an / c
        if abs(c) < _FPMIN:
            c = _FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _GAMMA_EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def regularized_gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if a <= 0:
        raise InvalidSpecError("gamma shape parameter must be positive")
    if x < 0:
        raise InvalidSpecError("gamma argument must be nonnegative")
    if x == 0.0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_cf(a, x)


def chi_cdf(x: float, dof: int) -> float:
    """CDF of the chi distribution with ``dof`` degrees of freedom."""
    if x <= 0.0:
        return 0.0
    return regularized_gamma_p(dof / 2.0, x * x / 2.0)


_chi_median_cache: dict[int, float] = {}


def chi_median(d: int) -> float:
    """Median of the chi distribution with d degrees of freedom.

    This is the dimensionality correction that converts a mean
    nearest-neighbor distance into a kernel standard deviation.  Found by
    bisection on :func:`chi_cdf` to absolute tolerance 1e-9; values are
    cached per dimension (concurrent first-writes are benign).
    """
    d = int(d)
    if d < 1:
        raise InvalidSpecError("dimension must be >= 1")
    cached = _chi_median_cache.get(d)
    if cached is not None:
        return cached
    lo, hi = 0.0, d + 10.0 * math.sqrt(d)
    while hi - lo > 1e-9:
        mid = 0.5 * (lo + hi)
        if chi_cdf(mid, d) < 0.5:
            lo = mid
        else:
            hi = mid
    value = 0.5 * (lo + hi)
    _chi_median_cache[d] = value
    return value


@dataclass(frozen=True)
class BolsteringSpec:
    """Gaussian bolstering kernel configuration.

    family : "spherical" (one sigma per class) or "diagonal" (one sigma
        per class per coordinate, the Naive-Bayes variant)
    sigmas : (c,) or (c, d) array of kernel standard deviations, or None
        to derive them from the dataset at estimation time
    kappa : multiplicative calibration factor applied to every sigma,
        identically on the exact and Monte-Carlo paths
    mc_samples : Monte-Carlo draws per training point when no closed form
        applies
    """

    family: str = "spherical"
    sigmas: np.ndarray | None = None
    kappa: float = 1.0
    mc_samples: int = 100

    def __post_init__(self):
        if self.family not in ("spherical", "diagonal"):
            raise InvalidSpecError(f"unknown kernel family {self.family!r}")
        if self.kappa <= 0:
            raise InvalidSpecError("kappa must be > 0")
        if self.mc_samples < 1:
            raise InvalidSpecError("mc_samples must be >= 1")
        if self.sigmas is not None:
            sig = np.asarray(self.sigmas, dtype=np.float64)
            expected_ndim = 1 if self.family == "spherical" else 2
            if sig.ndim != expected_ndim:
                raise InvalidSpecError(
                    f"{self.family} sigmas must be {expected_ndim}-D, got shape {sig.shape}"
                )
            if (sig < 0).any():
                raise InvalidSpecError("sigmas must be nonnegative")
            sig.setflags(write=False)
            object.__setattr__(self, "sigmas", sig)

    def resolve(self, ds: LabeledDataset) -> "BolsteringSpec":
        """Return a spec with concrete sigmas, deriving them from ``ds``
        when none were supplied."""
        if self.sigmas is not None:
            return self
        if self.family == "spherical":
            return replace(self, sigmas=spherical_sigmas(ds))
        return replace(self, sigmas=diagonal_sigmas(ds))

    def stdev(self, label: int):
        """Effective kernel stdev kappa * sigma for one class: a scalar for
        the spherical family, a (d,) vector for the diagonal family."""
        if self.sigmas is None:
            raise InvalidSpecError("sigmas not resolved; call resolve(dataset) first")
        if self.family == "spherical":
            return self.kappa * float(self.sigmas[label])
        return self.kappa * self.sigmas[label]


def spherical_sigmas(ds: LabeledDataset) -> np.ndarray:
    """Per-class spherical kernel stdevs: mean NN distance over the chi
    median for d degrees of freedom."""
    alpha = chi_median(ds.d)
    return np.array(
        [mean_min_distance(ds, j) / alpha for j in range(ds.class_count)]
    )


def diagonal_sigmas(ds: LabeledDataset) -> np.ndarray:
    """Per-class per-coordinate kernel stdevs: coordinate-wise mean NN gap
    over the one-dimensional chi median."""
    alpha = chi_median(1)
    return np.array(
        [
            [mean_min_coordinate_distance(ds, j, k) / alpha for k in range(ds.d)]
            for j in range(ds.class_count)
        ]
    )


def sample_kernel(
    center: np.ndarray,
    label: int,
    spec: BolsteringSpec,
    seed: int,
    count: int | None = None,
) -> np.ndarray:
    """Draw kernel points around one training point; deterministic given seed.

    Returns a (count, d) array; count defaults to ``spec.mc_samples``.
    """
    center = np.asarray(center, dtype=np.float64).ravel()
    m = int(count) if count is not None else spec.mc_samples
    sd = spec.stdev(label)
    rng = make_rng(seed)
    return center + sd * rng.standard_normal((m, center.shape[0]))


def halfspace_mass(
    center: np.ndarray,
    label: int,
    spec: BolsteringSpec,
    a: np.ndarray,
    b: float,
    side: int = 1,
) -> float:
    """Exact Gaussian kernel mass of the half-space {x : side*(a.x + b) > 0}.

    The kernel is N(center, diag((kappa*sigma)^2)) for the point's class.
    With a degenerate (zero-stdev) kernel the mass is the point indicator,
    with boundary points (a.center + b == 0) assigned mass 0.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    center = np.asarray(center, dtype=np.float64).ravel()
    if not np.any(a != 0.0):
        raise ValueError("zero normal vector")
    if side not in (-1, 1):
        raise ValueError("side must be +1 or -1")
    sd = spec.stdev(label)
    scale = math.sqrt(float(np.sum((a * sd) ** 2)))
    margin = float(a @ center + b)
    if scale == 0.0:
        return 1.0 if side * margin > 0 else 0.0
    return normal_cdf(side * margin / scale)
