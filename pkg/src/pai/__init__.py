"""Synthetic-sample Monte Carlo inference.

Generate synthetic samples from fitted invertible transports - with
multivariate rank matching against an inference sample and
distribution-preserving perturbation - and use them to estimate null
distributions of arbitrary statistics, run hypothesis tests with
finite-sample valid p-values, perform exact pivotal inference, and build
conditional prediction intervals.
"""

from .assignment import Assignment, rank_cost_matrix, solve_lsap
from .empirical import Correction, EmpiricalDistribution, Sidedness, cdf_eval, p_value
from .errors import InputError, NumericError, PaiError
from .generators import (
    CopulaTransport,
    FitInfo,
    GaussianTransport,
    PassConfig,
    fit_copula,
    fit_gaussian,
    gaussian_from_params,
    load_model,
    pass_synthesize,
    sample_statistic_null,
    save_model,
)
from .halton import HaltonSequence, halton_block, halton_point
from .inference import (
    PIVOT_MEAN_KNOWN_SCALE,
    PIVOT_STUDENTIZED_MEAN,
    PivotalResult,
    TestReport,
    pivotal_inference,
    test_conditional_coherence,
    test_feature_significance,
    test_two_sample_fid,
)
from .metrics import (
    GaussianSummary,
    cosine_similarity,
    fid,
    gaussian_summary,
    kolmogorov_survival,
    ks_distance,
    ks_test_standard_gaussian,
    wasserstein_exact,
)
from .perturb import (
    BaseDistribution,
    NoiseDistribution,
    PerturbationSpec,
    perturb,
    perturbation_discrepancy_f,
)
from .predict import (
    ConformalModel,
    CoverageReport,
    PredictionInterval,
    conditional_sample,
    conformal_fit,
    conformal_interval,
    coverage_report,
    pai_interval,
    regression_mean,
    regression_noise_sd,
    run_prediction_study,
    simulate_regression_data,
)
from .ranks import EmpiricalRankMap, empirical_ranks, match_ranks, rank_discrepancy
from .streams import derive_rng

__version__ = "0.1.0"

__all__ = [
    "Assignment",
    "BaseDistribution",
    "ConformalModel",
    "CopulaTransport",
    "Correction",
    "CoverageReport",
    "EmpiricalDistribution",
    "EmpiricalRankMap",
    "FitInfo",
    "GaussianSummary",
    "GaussianTransport",
    "HaltonSequence",
    "InputError",
    "NoiseDistribution",
    "NumericError",
    "PaiError",
    "PassConfig",
    "PerturbationSpec",
    "PivotalResult",
    "PIVOT_MEAN_KNOWN_SCALE",
    "PIVOT_STUDENTIZED_MEAN",
    "PredictionInterval",
    "TestReport",
    "cdf_eval",
    "conditional_sample",
    "conformal_fit",
    "conformal_interval",
    "cosine_similarity",
    "coverage_report",
    "derive_rng",
    "empirical_ranks",
    "fid",
    "fit_copula",
    "fit_gaussian",
    "gaussian_from_params",
    "gaussian_summary",
    "halton_block",
    "halton_point",
    "kolmogorov_survival",
    "ks_distance",
    "ks_test_standard_gaussian",
    "load_model",
    "match_ranks",
    "p_value",
    "pai_interval",
    "pass_synthesize",
    "perturb",
    "perturbation_discrepancy_f",
    "pivotal_inference",
    "rank_cost_matrix",
    "rank_discrepancy",
    "regression_mean",
    "regression_noise_sd",
    "run_prediction_study",
    "sample_statistic_null",
    "save_model",
    "simulate_regression_data",
    "solve_lsap",
    "test_conditional_coherence",
    "test_feature_significance",
    "test_two_sample_fid",
    "wasserstein_exact",
]
