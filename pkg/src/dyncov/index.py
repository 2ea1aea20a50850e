"""Estimation of the single index direction.

The model drives all conditional structure through a scalar index
``z_t = x_t' beta`` with ``||beta|| = 1`` and ``beta_1 > 0``. The
direction is fit by alternating two closed-form steps:

1. with the direction fixed, fit local-linear coefficients (level and
   slope of the intercept curve and of every factor-loading curve) at
   each anchor observation by kernel-weighted least squares;
2. with those local coefficients fixed, the discrepancy objective is an
   exact quadratic in the direction, so the update solves one q x q
   system; the result is renormalized to the unit sphere with a positive
   first component.

The kernel bandwidth is refreshed every iteration as a fixed fraction
(default 20%) of the range of the current index values.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import (
    DegenerateIndexError,
    FitFailureError,
    InsufficientDataError,
    InvalidArgumentError,
)

__all__ = [
    "IndexConfig",
    "IndexEstimate",
    "initial_beta",
    "range_bandwidth",
    "estimate_beta",
    "step1_coefficients",
    "step2_system",
    "objective_value",
]


@dataclass(frozen=True)
class IndexConfig:
    """Settings for the iterative direction fit."""

    bandwidth_fraction: float = 0.20
    max_iterations: int = 50
    tolerance: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.bandwidth_fraction <= 1):
            raise InvalidArgumentError("bandwidth_fraction must be in (0, 1]")
        if self.max_iterations < 1:
            raise InvalidArgumentError("max_iterations must be >= 1")
        if not (self.tolerance > 0):
            raise InvalidArgumentError("tolerance must be positive")


@dataclass
class IndexEstimate:
    """Result of the direction fit.

    ``beta`` is unit norm with positive first component. When the loop
    stops without meeting the tolerance, ``converged`` is False and
    ``beta`` is the iterate with the lowest recorded objective value.
    ``objective_trace`` holds the minimized quadratic objective after
    each iteration (each entry is computed under that iteration's own
    kernel weights, so the trace is a diagnostic, not a single descent
    curve).
    """

    beta: np.ndarray
    iterations: int
    converged: bool
    final_step_size: float
    objective_trace: np.ndarray = field(default_factory=lambda: np.empty(0))


def initial_beta(q, seed):
    """Deterministic random unit-norm starting direction, first entry > 0."""
    if q < 1:
        raise InvalidArgumentError("q must be >= 1")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(q)
    nrm = np.linalg.norm(v)
    if nrm == 0:  # absurdly unlikely; fall back to a fixed axis
        v = np.zeros(q)
        v[0] = 1.0
        nrm = 1.0
    v = v / nrm
    return _fix_sign(v)


def range_bandwidth(values, fraction=0.20):
    """Bandwidth as ``fraction * (max - min)`` of the given values."""
    if not (0 < fraction <= 1):
        raise InvalidArgumentError("fraction must be in (0, 1]")
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise InvalidArgumentError("values must be nonempty")
    spread = float(values.max() - values.min())
    if spread <= 0:
        raise DegenerateIndexError("index values have zero range")
    return fraction * spread


def _fix_sign(beta):
    """Flip sign so the first nonzero component is positive."""
    for v in beta:
        if v != 0:
            return beta if v > 0 else -beta
    return beta


def _series(returns, factors):
    Y = np.asarray(returns, dtype=float)
    X = np.asarray(factors, dtype=float)
    if Y.ndim != 2 or X.ndim != 2:
        raise InvalidArgumentError("returns and factors must be 2-D arrays")
    if Y.shape[0] != X.shape[0]:
        raise InvalidArgumentError("returns and factors must have equal length")
    if not (np.all(np.isfinite(Y)) and np.all(np.isfinite(X))):
        raise InvalidArgumentError("returns and factors must be finite")
    return X[1:], Y[1:], X[:-1]


def step1_coefficients(returns, factors, beta, h):
    """Per-anchor local-linear coefficients under a fixed direction.

    Anchors are the lagged observations themselves. Returns the raw
    backend output: coefficient tensor (n-1, 2q+2, p) in the column
    order [intercept, loadings, index-slope of intercept, index-slopes
    of loadings], Gram condition numbers, ridge/empty flags, and kernel
    weight sums.
    """
    X_reg, Ys, X_lag = _series(returns, factors)
    z = X_lag @ np.asarray(beta, dtype=float)
    bandwidths = np.full(z.shape[0], float(h))
    return _backend.local_linear_anchors(X_reg, Ys, z, z, bandwidths)


def step2_system(returns, factors, beta, h, coeffs, valid):
    """Quadratic pieces (G, b, c0) of the direction objective.

    The objective with local coefficients held fixed is
    ``Q(v) = c0 - 2 b'v + v'G v``; its unconstrained minimizer is the
    solution of ``G v = b``.
    """
    X_reg, Ys, X_lag = _series(returns, factors)
    z = X_lag @ np.asarray(beta, dtype=float)
    return _backend.beta_step2_system(X_reg, Ys, X_lag, z, float(h), coeffs, valid)


def objective_value(G, b, c0, beta):
    """Evaluate ``Q(beta) = c0 - 2 b'beta + beta'G beta``."""
    beta = np.asarray(beta, dtype=float)
    return float(c0 - 2.0 * (b @ beta) + beta @ G @ beta)


def estimate_beta(returns, factors, config=None):
    """Fit the unit-norm index direction by the two-step iteration.

    Parameters
    ----------
    returns : (n, p) ndarray
    factors : (n, q) ndarray
    config : IndexConfig, optional

    Returns
    -------
    IndexEstimate
    """
    if config is None:
        config = IndexConfig()
    X_reg, Ys, X_lag = _series(returns, factors)
    n = X_lag.shape[0] + 1
    q = X_lag.shape[1]
    if n < 2 * q + 3:
        raise InsufficientDataError(
            f"direction fit needs at least {2 * q + 3} observations, got {n}"
        )

    beta = initial_beta(q, config.seed)
    trace = []
    best_q = np.inf
    best_beta = beta
    step = np.inf
    iterations = 0
    converged = False

    for iterations in range(1, config.max_iterations + 1):
        z = X_lag @ beta
        h = range_bandwidth(z, config.bandwidth_fraction)

        coeffs, _conds, flags, _wsums = _backend.local_linear_anchors(
            X_reg, Ys, z, z, np.full(z.shape[0], h)
        )
        valid = flags < 2

        G, b, c0 = _backend.beta_step2_system(X_reg, Ys, X_lag, z, h, coeffs, valid)
        try:
            raw = np.linalg.solve(G, b)
        except np.linalg.LinAlgError:
            raw = np.linalg.lstsq(G, b, rcond=None)[0]
        nrm = np.linalg.norm(raw)
        if nrm == 0 or not np.all(np.isfinite(raw)):
            raise FitFailureError(
                "direction update vanished or is not finite",
                best_fit=IndexEstimate(
                    beta=best_beta,
                    iterations=iterations,
                    converged=False,
                    final_step_size=step,
                    objective_trace=np.array(trace),
                ),
            )
        new_beta = _fix_sign(raw / nrm)

        q_val = objective_value(G, b, c0, new_beta)
        trace.append(q_val)
        if q_val < best_q:
            best_q = q_val
            best_beta = new_beta

        step = float(np.linalg.norm(new_beta - beta))
        beta = new_beta
        if step < config.tolerance:
            converged = True
            break

    final_beta = beta if converged else best_beta
    return IndexEstimate(
        beta=final_beta,
        iterations=iterations,
        converged=converged,
        final_step_size=step,
        objective_trace=np.array(trace),
    )
