"""Covariance assembly, portfolio weights, baseline estimators, metrics.

The one-step conditional covariance of the return vector decomposes into
a factor part ``Phi Sigma_x Phi'`` and a diagonal idiosyncratic part.
Portfolio weights follow the closed-form minimum-variance solution with
a full-investment and a target-return constraint; all linear algebra
goes through factorizations and solves, never an explicit inverse (the
single exception is the inverse-accuracy *metric*, which is about the
inverse itself).
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import (
    DegenerateFrontierError,
    InsufficientDataError,
    InvalidArgumentError,
)

__all__ = [
    "ConditionalCovariance",
    "PortfolioWeights",
    "assemble_covariance",
    "conditional_mean_returns",
    "markowitz_weights",
    "sample_covariance",
    "static_factor_covariance",
    "delta_metric",
    "entropy_norm_sq",
]

# Relative frontier-degeneracy threshold on c1*c3 - c2^2.
_FRONTIER_TOL = 1e-12

# Jitter added after eigenvalue clipping when a Cholesky factorization fails.
_REPAIR_JITTER = 1e-10


@dataclass
class ConditionalCovariance:
    """Assembled covariance with its two components kept separately."""

    matrix: np.ndarray
    factor_part: np.ndarray
    idio_part: np.ndarray


@dataclass
class PortfolioWeights:
    weights: np.ndarray
    target_return: float
    c1: float
    c2: float
    c3: float
    psd_repaired: bool = False


def assemble_covariance(phi, sigma_x, idio_var):
    """Combine loadings, factor covariance, and idiosyncratic variances.

    Parameters
    ----------
    phi : (p, q) ndarray
        Factor loadings at the conditioning point.
    sigma_x : (q, q) ndarray
        Conditional factor covariance (symmetric PSD).
    idio_var : (p,) ndarray
        Per-asset idiosyncratic variances, strictly positive.
    """
    phi = np.asarray(phi, dtype=float)
    sigma_x = np.asarray(sigma_x, dtype=float)
    idio_var = np.asarray(idio_var, dtype=float)
    if phi.ndim != 2:
        raise InvalidArgumentError("phi must be 2-D (p, q)")
    p, q = phi.shape
    if sigma_x.shape != (q, q):
        raise InvalidArgumentError("sigma_x shape must match phi's column count")
    if idio_var.shape != (p,):
        raise InvalidArgumentError("idio_var must be a length-p vector")
    if np.any(idio_var <= 0) or not np.all(np.isfinite(idio_var)):
        raise InvalidArgumentError("idiosyncratic variances must be positive")
    if not np.allclose(sigma_x, sigma_x.T, rtol=0, atol=1e-8):
        raise InvalidArgumentError("sigma_x must be symmetric")

    factor_part = phi @ sigma_x @ phi.T
    factor_part = 0.5 * (factor_part + factor_part.T)
    idio_part = np.diag(idio_var)
    return ConditionalCovariance(
        matrix=factor_part + idio_part,
        factor_part=factor_part,
        idio_part=idio_part,
    )


def conditional_mean_returns(g, phi, factor_mean):
    """One-step conditional mean: intercept plus loadings times factor mean."""
    g = np.asarray(g, dtype=float)
    phi = np.asarray(phi, dtype=float)
    factor_mean = np.asarray(factor_mean, dtype=float)
    if phi.shape != (g.shape[0], factor_mean.shape[0]):
        raise InvalidArgumentError("g, phi, factor_mean shapes are inconsistent")
    return g + phi @ factor_mean


def _psd_repair(matrix):
    """Clip negative eigenvalues to zero and add a small diagonal jitter."""
    eigvals, eigvecs = np.linalg.eigh(matrix)
    repaired = (eigvecs * np.clip(eigvals, 0.0, None)) @ eigvecs.T
    repaired = 0.5 * (repaired + repaired.T)
    repaired[np.diag_indices_from(repaired)] += _REPAIR_JITTER
    return repaired


def markowitz_weights(cov, mu, delta):
    """Closed-form minimum-variance weights with a target-return constraint.

    Solves ``min w' cov w`` subject to ``sum(w) = 1`` and ``w'mu = delta``
    through two Cholesky solves. A covariance whose factorization fails
    is repaired (eigenvalue clip plus jitter) and the repair is reported.

    Raises
    ------
    DegenerateFrontierError
        When ``mu`` is (numerically) proportional to the ones vector,
        including ``mu = 0``: the two constraints are then collinear.
    """
    sigma = np.asarray(getattr(cov, "matrix", cov), dtype=float)
    mu = np.asarray(mu, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise InvalidArgumentError("covariance must be square")
    p = sigma.shape[0]
    if mu.shape != (p,):
        raise InvalidArgumentError("mu length must match covariance size")
    if not np.isfinite(delta):
        raise InvalidArgumentError("delta must be finite")
    sigma = 0.5 * (sigma + sigma.T)

    repaired = False
    try:
        factor = cho_factor(sigma, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        sigma = _psd_repair(sigma)
        repaired = True
        factor = cho_factor(sigma, lower=True, check_finite=False)

    ones = np.ones(p)
    sol_ones = cho_solve(factor, ones, check_finite=False)
    sol_mu = cho_solve(factor, mu, check_finite=False)

    c1 = float(ones @ sol_ones)
    c2 = float(ones @ sol_mu)
    c3 = float(mu @ sol_mu)
    denom = c1 * c3 - c2 * c2
    if denom <= _FRONTIER_TOL * abs(c1 * c3):
        raise DegenerateFrontierError(
            "mean vector is proportional to ones; target-return and "
            "full-investment constraints are collinear"
        )

    w = ((c3 - c2 * delta) / denom) * sol_ones + ((c1 * delta - c2) / denom) * sol_mu
    return PortfolioWeights(
        weights=w,
        target_return=float(delta),
        c1=c1,
        c2=c2,
        c3=c3,
        psd_repaired=repaired,
    )


def sample_covariance(returns):
    """Sample covariance with the 1/(n-1) denominator."""
    Y = np.asarray(returns, dtype=float)
    if Y.ndim != 2 or Y.shape[0] < 2:
        raise InsufficientDataError("sample covariance needs at least 2 rows")
    centered = Y - Y.mean(axis=0)
    return centered.T @ centered / (Y.shape[0] - 1)


def static_factor_covariance(returns, factors):
    """Static factor-model covariance: per-asset OLS on (1, factors).

    Covariance = B SampleCov(factors) B' + diag(residual variances),
    residual variances with the (T - q - 1) denominator.
    """
    Y = np.asarray(returns, dtype=float)
    X = np.asarray(factors, dtype=float)
    if Y.ndim != 2 or X.ndim != 2 or Y.shape[0] != X.shape[0]:
        raise InvalidArgumentError("returns and factors must be 2-D, equal length")
    T, q = X.shape
    if T < q + 2:
        raise InsufficientDataError(
            f"static factor covariance needs at least {q + 2} rows, got {T}"
        )
    design = np.column_stack([np.ones(T), X])
    coef, _res, _rank, _sv = np.linalg.lstsq(design, Y, rcond=None)
    B = coef[1:].T
    resid = Y - design @ coef
    resid_var = np.sum(resid * resid, axis=0) / (T - q - 1)
    cov = B @ sample_covariance(X) @ B.T + np.diag(resid_var)
    return 0.5 * (cov + cov.T)


def delta_metric(est, truth):
    """Relative Frobenius error ``||est - truth||_F / ||truth||_F``."""
    est = np.asarray(est, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if est.shape != truth.shape:
        raise InvalidArgumentError("shapes differ")
    denom = np.linalg.norm(truth)
    if denom == 0:
        raise InvalidArgumentError("truth matrix is zero; metric undefined")
    return float(np.linalg.norm(est - truth) / denom)


def entropy_norm_sq(est, truth):
    """Squared entropy-loss norm ``p^{-1} ||T^{-1/2}(E - T)T^{-1/2}||_F^2``.

    The symmetric square root comes from the eigendecomposition of the
    truth matrix, which must be symmetric positive definite.
    """
    est = np.asarray(est, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if est.shape != truth.shape or truth.ndim != 2:
        raise InvalidArgumentError("matrices must be square of equal shape")
    p = truth.shape[0]
    eigvals, eigvecs = np.linalg.eigh(0.5 * (truth + truth.T))
    if eigvals[0] <= 0:
        raise InvalidArgumentError("truth matrix must be positive definite")
    inv_root = (eigvecs / np.sqrt(eigvals)) @ eigvecs.T
    inner = inv_root @ (est - truth) @ inv_root
    return float(np.sum(inner * inner) / p)
