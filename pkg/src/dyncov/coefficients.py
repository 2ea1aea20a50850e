"""Local-linear estimation of the intercept and loading curves.

Given the fitted index direction, every asset's conditional intercept
``g_k(u)`` and loading vector ``a_k(u)`` are smooth curves in the scalar
index. At each query point one weighted least-squares problem of width
``2q + 2`` is factorized once and shared by all assets (the responses
differ, the design and weights do not).

Bandwidths come from k nearest neighbours on the index axis; the number
of neighbours is picked by rolling forward-validation: for each of the
last ``M + 1`` observations, curves are refit from the past alone and
scored by the unsquared Euclidean norm of the one-step prediction error.
"""

from dataclasses import dataclass

import numpy as np
import pandas as pd

from . import _backend
from .errors import (
    CvFailureError,
    EmptyWindowError,
    InsufficientDataError,
    InvalidArgumentError,
)
from .smoothing import knn_bandwidth

__all__ = [
    "CoefficientField",
    "CvPlan",
    "fit_curves",
    "cv_select_k",
    "residuals",
    "default_candidate_k",
    "default_lookback",
    "interior_grid",
    "curves_frame",
]


@dataclass
class CoefficientField:
    """Curve values and diagnostics at a set of index query points.

    ``g`` has shape (m, p); ``phi`` has shape (m, p, q) with
    ``phi[i, k, :]`` the loading vector of asset k at query i. The
    ``*_deriv`` arrays hold the local-linear slope estimates. ``flags``
    are per query: 0 clean, 1 ridge fallback, 2 empty window.
    """

    query_points: np.ndarray
    g: np.ndarray
    phi: np.ndarray
    g_deriv: np.ndarray
    phi_deriv: np.ndarray
    bandwidths: np.ndarray
    gram_conditions: np.ndarray
    flags: np.ndarray
    weight_sums: np.ndarray
    extrapolated: np.ndarray


@dataclass
class CvPlan:
    """Candidate neighbour counts and validation length for bandwidth CV."""

    candidate_k: tuple
    lookback_M: int
    scores: np.ndarray | None = None

    def __post_init__(self):
        ks = tuple(int(k) for k in self.candidate_k)
        if len(ks) == 0:
            raise InvalidArgumentError("candidate_k must be nonempty")
        if any(k < 1 for k in ks):
            raise InvalidArgumentError("candidate neighbour counts must be >= 1")
        if list(ks) != sorted(set(ks)):
            raise InvalidArgumentError("candidate_k must be strictly increasing")
        self.candidate_k = ks
        if self.lookback_M < 1:
            raise InvalidArgumentError("lookback_M must be >= 1")


def default_candidate_k(n):
    """Neighbour-count grid {5%, 10%, 20%, 40% of n}, deduplicated, >= 2."""
    ks = sorted({max(2, int(np.ceil(f * n))) for f in (0.05, 0.10, 0.20, 0.40)})
    return tuple(min(k, max(2, n - 2)) for k in ks)


def default_lookback(n):
    """Validation length min(100, n // 4), at least 1."""
    return max(1, min(100, n // 4))


def _beta_vector(beta):
    return np.asarray(getattr(beta, "beta", beta), dtype=float)


def _series(returns, factors):
    Y = np.asarray(returns, dtype=float)
    X = np.asarray(factors, dtype=float)
    if Y.ndim != 2 or X.ndim != 2 or Y.shape[0] != X.shape[0]:
        raise InvalidArgumentError("returns and factors must be 2-D with equal length")
    if Y.shape[0] < 3:
        raise InsufficientDataError("need at least 3 observations")
    return X[1:], Y[1:], X[:-1]


def fit_curves(returns, factors, beta, h1, queries):
    """Fit g and the loading curves at each query index value.

    Parameters
    ----------
    returns : (n, p) ndarray
    factors : (n, q) ndarray
    beta : (q,) ndarray or IndexEstimate
        Unit-norm index direction.
    h1 : float or (m,) ndarray
        Bandwidth per query (a scalar is broadcast).
    queries : (m,) ndarray
        Index values at which to evaluate the curves.

    Raises
    ------
    EmptyWindowError
        If some query has no kernel weight at its bandwidth.
    """
    b = _beta_vector(beta)
    X_reg, Ys, X_lag = _series(returns, factors)
    q = X_reg.shape[1]
    z = X_lag @ b
    queries = np.atleast_1d(np.asarray(queries, dtype=float))
    bw = np.broadcast_to(np.asarray(h1, dtype=float), queries.shape).astype(float)
    if np.any(bw <= 0) or not np.all(np.isfinite(bw)):
        raise InvalidArgumentError("bandwidths must be positive and finite")

    coeffs, conds, flags, wsums = _backend.local_linear_anchors(
        X_reg, Ys, z, queries, bw
    )
    if np.any(flags == 2):
        bad = np.nonzero(flags == 2)[0]
        raise EmptyWindowError(
            f"no kernel weight at query indices {bad.tolist()} "
            "(bandwidth too small for the data)"
        )

    g = coeffs[:, 0, :]
    phi = np.transpose(coeffs[:, 1 : q + 1, :], (0, 2, 1))
    g_deriv = coeffs[:, q + 1, :]
    phi_deriv = np.transpose(coeffs[:, q + 2 :, :], (0, 2, 1))
    extrapolated = (queries < z.min()) | (queries > z.max())

    return CoefficientField(
        query_points=queries,
        g=g,
        phi=phi,
        g_deriv=g_deriv,
        phi_deriv=phi_deriv,
        bandwidths=np.array(bw),
        gram_conditions=conds,
        flags=flags,
        weight_sums=wsums,
        extrapolated=extrapolated,
    )


def _forward_cv_error(Y, X, b, k, r):
    """One-step curve prediction error at validation row ``r`` from the past.

    Fits the curves on rows < r and predicts Y[r]. Returns the unsquared
    Euclidean error, or inf when the window carries no usable weight.
    """
    z_train = X[: r - 1] @ b
    u = float(X[r - 1] @ b)
    dist = np.abs(z_train - u)
    n_pos = int(np.count_nonzero(dist > 0))
    if n_pos == 0:
        return np.inf
    k_eff = min(k, n_pos)
    h = knn_bandwidth(u, z_train, k_eff)
    try:
        fld = fit_curves(Y[:r], X[:r], b, h, np.array([u]))
    except EmptyWindowError:
        return np.inf
    pred = fld.g[0] + fld.phi[0] @ X[r]
    return float(np.linalg.norm(Y[r] - pred))


def cv_select_k(returns, factors, beta, plan):
    """Pick the neighbour count by rolling one-step validation.

    Scores each candidate with the sum of unsquared prediction-error
    norms over the last ``M + 1`` observations, fitting on strictly
    earlier data each time. Smallest candidate wins ties. Fills
    ``plan.scores`` in candidate order.
    """
    b = _beta_vector(beta)
    Y = np.asarray(returns, dtype=float)
    X = np.asarray(factors, dtype=float)
    n = Y.shape[0]
    M = int(plan.lookback_M)
    if M > n - 4:
        raise InvalidArgumentError(
            f"lookback_M={M} leaves no training data for n={n} (need M <= n - 4)"
        )

    scores = np.zeros(len(plan.candidate_k))
    for ci, k in enumerate(plan.candidate_k):
        total = 0.0
        for r in range(n - M - 1, n):
            total += _forward_cv_error(Y, X, b, k, r)
            if not np.isfinite(total):
                total = np.inf
                break
        scores[ci] = total
    plan.scores = scores

    if not np.any(np.isfinite(scores)):
        raise CvFailureError("every candidate failed on every validation fold")
    best = int(np.argmin(scores))  # argmin takes the first, i.e. smallest k
    return plan.candidate_k[best]


def residuals(returns, factors, beta, field):
    """In-sample residuals ``y_kt - g_k - a_k'x_t`` as a (p, n-1) matrix.

    ``field`` must be evaluated exactly at the in-sample index values
    (lagged factors times beta), in order.
    """
    b = _beta_vector(beta)
    X_reg, Ys, X_lag = _series(returns, factors)
    z = X_lag @ b
    if field.query_points.shape != z.shape or not np.allclose(
        field.query_points, z, rtol=0, atol=1e-10
    ):
        raise InvalidArgumentError(
            "field must be evaluated at the in-sample index values"
        )
    fitted = field.g + np.einsum("mkq,mq->mk", field.phi, X_reg)
    return (Ys - fitted).T


def interior_grid(values, num=100):
    """Equispaced grid of ``num`` points strictly inside the value range."""
    values = np.asarray(values, dtype=float)
    lo, hi = float(values.min()), float(values.max())
    if not hi > lo:
        raise InvalidArgumentError("values have zero range")
    return np.linspace(lo, hi, num + 2)[1:-1]


def curves_frame(field, asset_names=None):
    """Long-format frame of the curves: (u, asset_id, g, a_1..a_q)."""
    m, p = field.g.shape
    q = field.phi.shape[2]
    if asset_names is None:
        asset_names = [str(k) for k in range(p)]
    rows = {
        "u": np.repeat(field.query_points, p),
        "asset_id": np.tile(np.asarray(asset_names, dtype=object), m),
        "g": field.g.reshape(-1),
    }
    for r in range(q):
        rows[f"a_{r + 1}"] = field.phi[:, :, r].reshape(-1)
    return pd.DataFrame(rows)
