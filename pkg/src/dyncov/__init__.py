"""Dynamic conditional covariance estimation for factor return panels.

A single scalar index of yesterday's factors drives smoothly varying
intercepts and factor loadings; the idiosyncratic part follows per-asset
GARCH. The fitted model yields a one-step conditional covariance matrix
used for mean-variance allocation, simulation studies, and backtests.
"""

from .backtest import BacktestResult, run_backtest, verify_ledger
from .coefficients import (
    CoefficientField,
    CvPlan,
    curves_frame,
    cv_select_k,
    fit_curves,
    interior_grid,
    residuals,
)
from .covariance import (
    ConditionalCovariance,
    PortfolioWeights,
    assemble_covariance,
    delta_metric,
    entropy_norm_sq,
    markowitz_weights,
    sample_covariance,
    static_factor_covariance,
)
from .data import Dataset, FrenchTable, build_dataset, load_french_csv
from .errors import (
    CvFailureError,
    DegenerateFrontierError,
    DegenerateIndexError,
    DegenerateWindowError,
    DyncovError,
    EmptyDatasetError,
    EmptyWindowError,
    FitFailureError,
    InsufficientDataError,
    InvalidArgumentError,
    ParseError,
)
from .factor_moments import (
    FactorMomentEstimate,
    conditional_covariance,
    conditional_mean,
    select_h2,
)
from .garch import GarchFit, GarchParams, forecast_sigma2, qmle_fit
from .index import IndexConfig, IndexEstimate, estimate_beta
from .pipeline import PipelineConfig, PipelineFit, fit_pipeline, predict_next
from .simulate import (
    SimulationConfig,
    SimulationTruth,
    StudyResult,
    run_simulation_study,
    simulate_dgp,
)
from .smoothing import KernelSpec, kernel_eval, knn_bandwidth, knn_bandwidths, solve_wls

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "BacktestResult",
    "CoefficientField",
    "ConditionalCovariance",
    "CvFailureError",
    "CvPlan",
    "Dataset",
    "DegenerateFrontierError",
    "DegenerateIndexError",
    "DegenerateWindowError",
    "DyncovError",
    "EmptyDatasetError",
    "EmptyWindowError",
    "FactorMomentEstimate",
    "FitFailureError",
    "FrenchTable",
    "GarchFit",
    "GarchParams",
    "IndexConfig",
    "IndexEstimate",
    "InsufficientDataError",
    "InvalidArgumentError",
    "KernelSpec",
    "ParseError",
    "PipelineConfig",
    "PipelineFit",
    "PortfolioWeights",
    "SimulationConfig",
    "SimulationTruth",
    "StudyResult",
    "assemble_covariance",
    "build_dataset",
    "conditional_covariance",
    "conditional_mean",
    "curves_frame",
    "cv_select_k",
    "delta_metric",
    "entropy_norm_sq",
    "estimate_beta",
    "fit_curves",
    "fit_pipeline",
    "forecast_sigma2",
    "interior_grid",
    "kernel_eval",
    "knn_bandwidth",
    "knn_bandwidths",
    "load_french_csv",
    "markowitz_weights",
    "predict_next",
    "qmle_fit",
    "residuals",
    "run_backtest",
    "run_simulation_study",
    "sample_covariance",
    "select_h2",
    "simulate_dgp",
    "solve_wls",
    "static_factor_covariance",
    "verify_ledger",
]
