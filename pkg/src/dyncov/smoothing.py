"""Kernel smoothing primitives: Epanechnikov kernel, k-NN bandwidths, and
the weighted least-squares core used by every local fit in the package.

All local regressions elsewhere (index estimation, coefficient curves,
factor moments) reduce to the routines here, so their numeric conventions
are pinned in one place:

* kernel: ``K(u) = 0.75 * (1 - u^2)`` for ``|u| < 1``, else 0;
* scaling: ``K_h(u) = K(u / h) / h`` with ``h > 0``;
* bandwidths from k nearest neighbours exclude zero distances, so a query
  point sitting on an observation does not produce a zero bandwidth;
* singular weighted Gram matrices fall back to a small ridge,
  ``1e-8 * trace(gram) / ncols``, and the fallback is reported.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateWindowError,
    InsufficientDataError,
    InvalidArgumentError,
)

__all__ = [
    "KernelSpec",
    "WlsProblem",
    "WlsSolution",
    "kernel_eval",
    "scaled_kernel",
    "knn_bandwidth",
    "knn_bandwidths",
    "solve_wls",
]

# Condition number beyond which a weighted Gram matrix is treated as
# numerically singular and the ridge fallback kicks in.
CONDITION_LIMIT = 1e12

# Ridge scale applied on fallback: RIDGE_SCALE * trace(gram) / ncols.
RIDGE_SCALE = 1e-8


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family descriptor. Only the Epanechnikov family is shipped."""

    family: str = "epanechnikov"
    support_radius: float = 1.0

    def __post_init__(self):
        if self.family != "epanechnikov":
            raise InvalidArgumentError(f"unknown kernel family: {self.family!r}")
        if not (self.support_radius > 0):
            raise InvalidArgumentError("support_radius must be positive")


def kernel_eval(u):
    """Epanechnikov kernel, vectorized: 0.75*(1-u^2) inside (-1, 1), else 0.

    Parameters
    ----------
    u : float or ndarray
        Evaluation points. Must be finite.

    Returns
    -------
    float or ndarray
        Kernel values, same shape as ``u``.
    """
    arr = np.asarray(u, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("kernel argument must be finite")
    out = np.where(np.abs(arr) < 1.0, 0.75 * (1.0 - arr * arr), 0.0)
    if np.isscalar(u) or arr.ndim == 0:
        return float(out)
    return out


def scaled_kernel(u, h):
    """Bandwidth-scaled kernel ``K(u / h) / h``.

    ``h`` must be strictly positive; a zero or negative bandwidth is a
    caller bug, not a fit problem, so it raises immediately.
    """
    if not np.isscalar(h) or not np.isfinite(h) or h <= 0:
        raise InvalidArgumentError(f"bandwidth must be a positive scalar, got {h!r}")
    arr = np.asarray(u, dtype=float)
    out = kernel_eval(arr / h)
    return out / h


def knn_bandwidth(center, points, k):
    """Distance from ``center`` to its k-th nearest neighbour in ``points``.

    Zero distances are excluded so a query coinciding with an observation
    still gets a usable positive bandwidth. Ties are handled by plain
    ascending sort: the k-th element of the sorted positive distances is
    returned, duplicates counting separately.

    Raises
    ------
    InsufficientDataError
        If fewer than ``k`` strictly positive distances exist.
    """
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise InvalidArgumentError(f"k must be a positive integer, got {k!r}")
    pts = np.asarray(points, dtype=float)
    c = np.asarray(center, dtype=float)
    if pts.ndim == 1:
        dists = np.abs(pts - float(c))
    else:
        dists = np.sqrt(np.sum((pts - c[None, :]) ** 2, axis=1))
    positive = np.sort(dists[dists > 0.0])
    if positive.size < k:
        raise InsufficientDataError(
            f"k-NN bandwidth needs {k} strictly positive distances, "
            f"found {positive.size}"
        )
    return float(positive[k - 1])


def knn_bandwidths(centers, points, k):
    """Vectorized :func:`knn_bandwidth` over an array of scalar centers."""
    centers = np.asarray(centers, dtype=float)
    return np.array([knn_bandwidth(c, points, k) for c in centers])


@dataclass
class WlsProblem:
    """A weighted least-squares problem ``min sum_i w_i ||y_i - x_i'b||^2``.

    ``response`` may be a vector (single response) or a matrix with one
    column per response sharing the same design and weights. ``ridge`` is
    an explicit, always-applied diagonal addition; the automatic fallback
    for singular Grams is separate and reported on the solution.
    """

    design: np.ndarray
    response: np.ndarray
    weights: np.ndarray
    ridge: float = 0.0

    def __post_init__(self):
        self.design = np.asarray(self.design, dtype=float)
        self.response = np.asarray(self.response, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.design.ndim != 2:
            raise InvalidArgumentError("design must be 2-D")
        n = self.design.shape[0]
        if self.response.shape[0] != n or self.weights.shape != (n,):
            raise InvalidArgumentError("design, response, weights row counts differ")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise InvalidArgumentError("weights must be finite and nonnegative")
        if self.ridge < 0:
            raise InvalidArgumentError("ridge must be nonnegative")


@dataclass
class WlsSolution:
    coefficients: np.ndarray
    gram_condition: float
    ridge_applied: bool = False
    applied_ridge: float = 0.0
    diagnostics: dict = field(default_factory=dict)


def solve_wls(problem):
    """Solve a (multi-response) weighted least-squares problem.

    Normal-equations solve with a condition check on the weighted Gram
    matrix. A Gram with condition number above ``CONDITION_LIMIT`` (or one
    that is outright singular) is re-solved with the fallback ridge
    ``RIDGE_SCALE * trace(gram) / ncols`` added to the diagonal, and the
    solution reports ``ridge_applied=True``.

    Raises
    ------
    DegenerateWindowError
        If every weight is zero: there is no data in the window.
    """
    if not isinstance(problem, WlsProblem):
        problem = WlsProblem(*problem)
    w = problem.weights
    if not np.any(w > 0):
        raise DegenerateWindowError("all weights are zero in this window")
    X = problem.design
    y = problem.response
    d = X.shape[1]

    Xw = X * w[:, None]
    gram = Xw.T @ X
    rhs = Xw.T @ y
    if problem.ridge > 0:
        gram = gram + problem.ridge * np.eye(d)

    sv = np.linalg.svd(gram, compute_uv=False)
    smax = sv[0]
    smin = sv[-1]
    cond = np.inf if smin <= 0 else float(smax / smin)

    ridge_applied = False
    applied = 0.0
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        applied = RIDGE_SCALE * float(np.trace(gram)) / d
        if applied <= 0:
            # Gram has zero trace (all design entries in the window are 0);
            # any positive ridge makes the system solvable and returns 0.
            applied = RIDGE_SCALE
        gram = gram + applied * np.eye(d)
        ridge_applied = True

    coef = np.linalg.solve(gram, rhs)
    return WlsSolution(
        coefficients=coef,
        gram_condition=cond,
        ridge_applied=ridge_applied,
        applied_ridge=applied,
    )
