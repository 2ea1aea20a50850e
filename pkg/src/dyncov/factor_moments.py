"""Conditional mean and covariance of the observable factors.

One-step factor moments are estimated by kernel regression on the lagged
factor vector: weights are Epanechnikov in the Euclidean distance
between the conditioning point and each lagged observation. The
conditional covariance is the weighted second moment minus the outer
product of the weighted mean; the algebraically equivalent single-matrix
form is evaluated as well and the two are required to agree, which guards
the implementation against weight-normalization bugs.

The bandwidth is a single global scalar chosen by rolling one-step
forward validation of the conditional mean.
"""

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist

from . import _backend
from .errors import (
    CvFailureError,
    DyncovError,
    EmptyWindowError,
    InsufficientDataError,
    InvalidArgumentError,
)

__all__ = [
    "FactorMomentEstimate",
    "conditional_mean",
    "conditional_covariance",
    "select_h2",
    "default_h2_candidates",
    "default_lookback_h2",
]

# Relative agreement required between the two covariance forms.
_FORM_AGREEMENT = 1e-8


@dataclass
class FactorMomentEstimate:
    """Kernel moment estimates at one conditioning point."""

    mean: np.ndarray
    second_moment: np.ndarray
    covariance: np.ndarray
    weight_sum: float
    psd_repaired: bool = False


def _pairs(factors):
    X = np.asarray(factors, dtype=float)
    if X.ndim != 2:
        raise InvalidArgumentError("factors must be 2-D")
    if X.shape[0] < 2:
        raise InsufficientDataError("need at least 2 factor observations")
    return X[:-1], X[1:]


def _check_point(u, q):
    u = np.asarray(u, dtype=float)
    if u.shape != (q,):
        raise InvalidArgumentError(f"conditioning point must have shape ({q},)")
    return u


def conditional_mean(factors, u, h2):
    """Kernel-weighted mean of the next factor vector near ``u``."""
    X_lag, X_next = _pairs(factors)
    u = _check_point(u, X_lag.shape[1])
    if not (np.isscalar(h2) and np.isfinite(h2) and h2 > 0):
        raise InvalidArgumentError("h2 must be a positive scalar")
    mean, _second, wsum = _backend.nw_moments(X_lag, X_next, u, float(h2))
    if wsum <= 0:
        raise EmptyWindowError("no lagged factor observation within bandwidth of u")
    return mean


def conditional_covariance(factors, u, h2):
    """Kernel conditional covariance of the next factor vector near ``u``.

    Computes the moment difference form and the equivalent single-matrix
    form and verifies they agree; clips any negative eigenvalues (float
    dust; the estimator is a weighted covariance, hence PSD in exact
    arithmetic) and reports the repair.
    """
    X_lag, X_next = _pairs(factors)
    q = X_lag.shape[1]
    u = _check_point(u, q)
    if not (np.isscalar(h2) and np.isfinite(h2) and h2 > 0):
        raise InvalidArgumentError("h2 must be a positive scalar")

    mean, second, wsum = _backend.nw_moments(X_lag, X_next, u, float(h2))
    if wsum <= 0:
        raise EmptyWindowError("no lagged factor observation within bandwidth of u")
    cov = second - np.outer(mean, mean)

    # Independent evaluation through the single-matrix identity:
    # (trW * X'WX - X'W 1 1' W X) / (trW)^2 with W the diagonal weight matrix.
    dist = np.sqrt(np.sum((X_lag - u[None, :]) ** 2, axis=1))
    v = dist / h2
    w = np.where(v < 1.0, 0.75 * (1.0 - v * v) / h2, 0.0)
    trw = w.sum()
    xw = X_next.T @ w
    matrix_form = ((X_next * w[:, None]).T @ X_next * trw - np.outer(xw, xw)) / trw**2
    scale = max(1.0, float(np.abs(cov).max()))
    if np.max(np.abs(cov - matrix_form)) > _FORM_AGREEMENT * scale:
        raise DyncovError(
            "conditional covariance forms disagree beyond tolerance; "
            "this indicates a weight-normalization bug"
        )

    cov = 0.5 * (cov + cov.T)
    eigvals, eigvecs = np.linalg.eigh(cov)
    repaired = bool(eigvals[0] < 0)
    if repaired:
        cov = (eigvecs * np.clip(eigvals, 0.0, None)) @ eigvecs.T
        cov = 0.5 * (cov + cov.T)

    return FactorMomentEstimate(
        mean=mean,
        second_moment=second,
        covariance=cov,
        weight_sum=float(wsum),
        psd_repaired=repaired,
    )


def default_h2_candidates(factors):
    """Bandwidth grid from the lagged-factor distance distribution.

    Quantiles {10%, 25%, 50%, 75%} of the positive pairwise distances,
    plus twice the maximum (a near-global smoother), deduplicated.
    """
    X_lag, _ = _pairs(factors)
    d = pdist(X_lag)
    d = d[d > 0]
    if d.size == 0:
        raise InsufficientDataError(
            "all lagged factor observations coincide; no bandwidth grid exists"
        )
    qs = np.quantile(d, [0.10, 0.25, 0.50, 0.75])
    grid = np.unique(np.concatenate([qs, [2.0 * d.max()]]))
    return grid[grid > 0]


def default_lookback_h2(n):
    """Validation length min(100, n // 4), at least 1."""
    return max(1, min(100, n // 4))


def select_h2(factors, candidates=None, lookback_M=None):
    """Pick the factor-moment bandwidth by rolling one-step validation.

    For each of the last ``M + 1`` observations the conditional mean is
    estimated from strictly earlier pairs and scored by the unsquared
    Euclidean prediction error. Candidates whose window is empty on some
    fold score infinity. Smallest candidate wins ties.
    """
    X = np.asarray(factors, dtype=float)
    n = X.shape[0]
    if candidates is None:
        candidates = default_h2_candidates(X)
    candidates = np.sort(np.asarray(candidates, dtype=float))
    if candidates.size == 0 or np.any(candidates <= 0):
        raise InvalidArgumentError("candidates must be positive")
    if lookback_M is None:
        lookback_M = default_lookback_h2(n)
    M = int(lookback_M)
    if M > n - 3:
        raise InvalidArgumentError(
            f"lookback_M={M} leaves no training data for n={n} (need M <= n - 3)"
        )

    scores = np.zeros(candidates.size)
    for ci, h2 in enumerate(candidates):
        total = 0.0
        for r in range(n - M - 1, n):
            # train on pairs within rows 0..r-1, predict row r from row r-1
            try:
                pred = conditional_mean(X[:r], X[r - 1], h2)
            except EmptyWindowError:
                total = np.inf
                break
            total += float(np.linalg.norm(X[r] - pred))
        scores[ci] = total

    if not np.any(np.isfinite(scores)):
        raise CvFailureError("every bandwidth candidate had an empty window")
    return float(candidates[int(np.argmin(scores))])
