"""Risk-ratio treatment-effect estimation.

Point estimators for the ratio of mean potential outcomes in randomised
and observational data, plug-in asymptotic variances and confidence
intervals, synthetic data-generating processes with known truths, and a
deterministic Monte-Carlo benchmark harness.
"""

from .data import CsvSchema, DatasetSummary, ObservationalDataset, load_csv, summarize, write_csv
from .dgp import (
    KINDS,
    DGPSpec,
    GeneratedSample,
    TrueRR,
    export_sample,
    generate,
    oracle_models,
    softplus_mean_quadrature,
    true_rr,
)
from .errors import (
    ConvergenceError,
    EstimationError,
    RankDeficiencyError,
    SeparationError,
    ValidationError,
)
from .estimators import (
    ArmFunctionals,
    CrossfitScores,
    FoldPartition,
    NuisanceRecipe,
    RRPoint,
    arm_functionals,
    crossfit_arm_functionals,
    crossfit_nuisances,
    make_folds,
    rr_aipw,
    rr_g,
    rr_ht,
    rr_ipw,
    rr_neyman,
    rr_os,
)
from .inference import (
    RREstimate,
    attach_interval,
    katz_ci,
    log_delta_ci,
    norm_quantile,
    optimal_e_ht,
    optimal_e_neyman,
    var_g,
    var_ht,
    var_ipw,
    var_ipw_mle_adjusted,
    var_neyman,
    var_os,
    wald_ci,
)
from .montecarlo import (
    EstimatorConfig,
    ExperimentPlan,
    MonteCarloReport,
    compare_estimators,
    run_experiment,
    run_single,
    write_report_csv,
    write_report_json,
)
from .nuisance import (
    ForestConfig,
    OutcomeModel,
    PropensityModel,
    constant_outcome,
    constant_propensity,
    fit_forest_classifier,
    fit_forest_regressor,
    fit_logistic_mle,
    fit_ols,
    model_from_json,
    model_to_json,
    predict_outcome,
    predict_propensity,
)
from .rng import CounterRng, derive_seed

__version__ = "0.1.0"

__all__ = [
    "ArmFunctionals",
    "ConvergenceError",
    "CounterRng",
    "CrossfitScores",
    "CsvSchema",
    "DGPSpec",
    "DatasetSummary",
    "EstimationError",
    "EstimatorConfig",
    "ExperimentPlan",
    "FoldPartition",
    "ForestConfig",
    "GeneratedSample",
    "KINDS",
    "MonteCarloReport",
    "NuisanceRecipe",
    "ObservationalDataset",
    "OutcomeModel",
    "PropensityModel",
    "RankDeficiencyError",
    "RREstimate",
    "RRPoint",
    "SeparationError",
    "TrueRR",
    "ValidationError",
    "arm_functionals",
    "attach_interval",
    "compare_estimators",
    "constant_outcome",
    "constant_propensity",
    "crossfit_arm_functionals",
    "crossfit_nuisances",
    "derive_seed",
    "export_sample",
    "fit_forest_classifier",
    "fit_forest_regressor",
    "fit_logistic_mle",
    "fit_ols",
    "generate",
    "katz_ci",
    "load_csv",
    "log_delta_ci",
    "make_folds",
    "model_from_json",
    "model_to_json",
    "norm_quantile",
    "optimal_e_ht",
    "optimal_e_neyman",
    "oracle_models",
    "predict_outcome",
    "predict_propensity",
    "rr_aipw",
    "rr_g",
    "rr_ht",
    "rr_ipw",
    "rr_neyman",
    "rr_os",
    "run_experiment",
    "run_single",
    "softplus_mean_quadrature",
    "summarize",
    "true_rr",
    "var_g",
    "var_ht",
    "var_ipw",
    "var_ipw_mle_adjusted",
    "var_neyman",
    "var_os",
    "wald_ci",
    "write_csv",
    "write_report_csv",
    "write_report_json",
]
