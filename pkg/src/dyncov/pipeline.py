"""Full estimation pipeline: direction, curves, residual GARCH, factor
moments, and the one-step-ahead covariance/mean prediction.

``fit_pipeline`` runs every stage on a return/factor panel;
``predict_next`` assembles the conditional covariance and mean of the
next (unobserved) return vector given the last observed factor row.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .coefficients import (
    CoefficientField,
    CvPlan,
    cv_select_k,
    default_candidate_k,
    default_lookback,
    fit_curves,
    residuals,
)
from .covariance import ConditionalCovariance, assemble_covariance
from .errors import InvalidArgumentError
from .factor_moments import conditional_covariance, conditional_mean, select_h2
from .garch import forecast_sigma2, qmle_fit
from .index import IndexConfig, IndexEstimate, estimate_beta
from .smoothing import knn_bandwidth, knn_bandwidths

__all__ = ["PipelineConfig", "PipelineFit", "fit_pipeline", "predict_next"]


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for the full fit. ``None`` means data-driven default."""

    index: IndexConfig = field(default_factory=IndexConfig)
    candidate_k: tuple | None = None
    cv_lookback: int | None = None
    h2_candidates: tuple | None = None
    h2_lookback: int | None = None
    garch_m: int = 1
    garch_s: int = 1
    garch_init: str = "alpha0"


@dataclass
class PipelineFit:
    """Everything the prediction step needs, plus diagnostics."""

    beta: IndexEstimate
    selected_k: int
    cv_scores: np.ndarray
    field_in_sample: CoefficientField
    residual_matrix: np.ndarray
    garch_fits: list
    h2: float
    g_star: np.ndarray
    phi_star: np.ndarray
    sigma_x: np.ndarray
    sigma_x_repaired: bool
    factor_mean: np.ndarray
    sigma2_next: np.ndarray
    n_obs: int


def fit_pipeline(returns, factors, config=None):
    """Fit every stage of the model on an aligned return/factor panel.

    Parameters
    ----------
    returns : (n, p) ndarray
        Asset returns (percent units by convention).
    factors : (n, q) ndarray
        Observable factors, aligned with the returns.
    config : PipelineConfig, optional

    Returns
    -------
    PipelineFit
    """
    if config is None:
        config = PipelineConfig()
    Y = np.asarray(returns, dtype=float)
    X = np.asarray(factors, dtype=float)
    if Y.ndim != 2 or X.ndim != 2 or Y.shape[0] != X.shape[0]:
        raise InvalidArgumentError("returns and factors must be 2-D, equal length")
    n = Y.shape[0]

    beta_est = estimate_beta(Y, X, config.index)
    beta = beta_est.beta

    candidates = config.candidate_k or default_candidate_k(n)
    lookback = config.cv_lookback or default_lookback(n)
    plan = CvPlan(candidate_k=candidates, lookback_M=lookback)
    k_hat = cv_select_k(Y, X, beta, plan)

    z = X[:-1] @ beta
    h1 = knn_bandwidths(z, z, k_hat)
    field_in = fit_curves(Y, X, beta, h1, z)
    resid = residuals(Y, X, beta, field_in)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", UserWarning)
        fits = [
            qmle_fit(resid[k], m=config.garch_m, s=config.garch_s, init_mode=config.garch_init)
            for k in range(resid.shape[0])
        ]
    # One per-asset series triggers the same length warning p times over.
    seen = {str(w.message) for w in caught if issubclass(w.category, UserWarning)}
    for message in sorted(seen):
        warnings.warn(message, UserWarning, stacklevel=2)
    sigma2_next = np.array(
        [
            forecast_sigma2(fit, resid[k, -config.garch_m :])
            for k, fit in enumerate(fits)
        ]
    )

    h2 = select_h2(X, candidates=config.h2_candidates, lookback_M=config.h2_lookback)

    u_star = float(X[-1] @ beta)
    h_star = knn_bandwidth(u_star, z, min(k_hat, int(np.count_nonzero(np.abs(z - u_star) > 0))))
    field_star = fit_curves(Y, X, beta, h_star, np.array([u_star]))
    g_star = field_star.g[0]
    phi_star = field_star.phi[0]

    moments = conditional_covariance(X, X[-1], h2)
    factor_mean = conditional_mean(X, X[-1], h2)

    return PipelineFit(
        beta=beta_est,
        selected_k=int(k_hat),
        cv_scores=plan.scores,
        field_in_sample=field_in,
        residual_matrix=resid,
        garch_fits=fits,
        h2=float(h2),
        g_star=g_star,
        phi_star=phi_star,
        sigma_x=moments.covariance,
        sigma_x_repaired=moments.psd_repaired,
        factor_mean=factor_mean,
        sigma2_next=sigma2_next,
        n_obs=n,
    )


def predict_next(fit):
    """One-step-ahead conditional covariance and mean of the returns.

    Returns
    -------
    (ConditionalCovariance, (p,) ndarray)
    """
    cov = assemble_covariance(fit.phi_star, fit.sigma_x, fit.sigma2_next)
    mean = fit.g_star + fit.phi_star @ fit.factor_mean
    return cov, mean
