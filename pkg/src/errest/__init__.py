"""errest: classification error estimation toolkit.

Estimators (plain/bolstered/semi-bolstered resubstitution, kNN
posterior-probability and its bolstered combination, cross-validation,
zero bootstrap, test-set), bolstering-kernel width selection and kappa
calibration, built-in classifiers (linear/RBF SVM, CART, kNN), a
synthetic block-covariance Gaussian generator, and a repeated-trial
harness measuring estimator bias, deviation variance, RMS, and speed.
"""

from .calibration import (
    CalibrationResult,
    CalibrationSpec,
    calibrate_kappa,
    repetition_seed,
    rough_bias,
    rough_bias_single,
    search_kappa,
)
from .classifiers import Classifier, TrainingConfig, decision_margin, train
from .dataset import (
    LabeledDataset,
    SyntheticModelSpec,
    covariance_matrix,
    default_synthetic_model,
    generate_synthetic,
    load_csv,
    mean_min_coordinate_distance,
    mean_min_distance,
    model_from_config,
    model_to_config,
    save_csv,
)
from .estimators import (
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
from .exceptions import (
    EstimationFailedError,
    InsufficientClassDataError,
    InvalidSpecError,
    UnsupportedOperationError,
)
from .harness import (
    ESTIMATOR_IDS,
    DeviationStats,
    EstimatorConfig,
    ExperimentResult,
    ExperimentSpec,
    internal_variance,
    markov_check,
    run_experiment,
    true_error,
)
from .kernels import (
    BolsteringSpec,
    chi_median,
    diagonal_sigmas,
    halfspace_mass,
    normal_cdf,
    sample_kernel,
    spherical_sigmas,
)
from .seeding import derive_seed, make_rng

__version__ = "0.1.0"

__all__ = [
    "BolsteringSpec",
    "CalibrationResult",
    "CalibrationSpec",
    "Classifier",
    "DeviationStats",
    "ESTIMATOR_IDS",
    "ErrorEstimate",
    "EstimationFailedError",
    "EstimatorConfig",
    "ExperimentResult",
    "ExperimentSpec",
    "InsufficientClassDataError",
    "InvalidSpecError",
    "LabeledDataset",
    "PosteriorSpec",
    "ResamplingSpec",
    "SyntheticModelSpec",
    "TrainingConfig",
    "UnsupportedOperationError",
    "bolstered_posterior_resub",
    "bolstered_resub",
    "bootstrap_zero",
    "calibrate_kappa",
    "chi_median",
    "covariance_matrix",
    "cross_validation",
    "decision_margin",
    "default_synthetic_model",
    "derive_seed",
    "diagonal_sigmas",
    "generate_synthetic",
    "halfspace_mass",
    "internal_variance",
    "knn_posterior_resub",
    "load_csv",
    "make_rng",
    "markov_check",
    "mean_min_coordinate_distance",
    "mean_min_distance",
    "model_from_config",
    "model_to_config",
    "normal_cdf",
    "repetition_seed",
    "resubstitution",
    "rough_bias",
    "rough_bias_single",
    "run_experiment",
    "sample_kernel",
    "save_csv",
    "search_kappa",
    "semi_bolstered_resub",
    "spherical_sigmas",
    "test_set",
    "train",
    "true_error",
]
