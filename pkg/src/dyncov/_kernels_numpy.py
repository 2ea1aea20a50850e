"""Pure-numpy reference implementations of the hot kernels.

Every function here has a numba twin in ``_kernels_numba`` with the same
signature and semantics; ``_backend`` picks one set at import time. Keep
the two files in lockstep.

Shared conventions:

* series layout: for observations ``0..n-1`` the regression series drops
  the first row; ``X_reg[t] = X[t+1]``, ``Y_s[t] = Y[t+1]``,
  ``X_lag[t] = X[t]``, ``z[t] = X[t] @ beta`` for ``t = 0..N-1``,
  ``N = n-1``;
* local design row at center ``c``: ``[1, x, dz, dz * x]`` with
  ``dz = z[t] - c`` (width ``2q + 2``);
* kernel weight: Epanechnikov, ``0.75 (1 - (dz/h)^2) / h`` inside the
  window, zero outside;
* flags per center: 0 = clean solve, 1 = ridge fallback used,
  2 = empty window (no kernel mass, coefficients are NaN).
"""

import numpy as np
from scipy.signal import lfilter, lfiltic

CONDITION_LIMIT = 1e12
RIDGE_SCALE = 1e-8


def _window_bounds(z_sorted, center, h):
    lo = np.searchsorted(z_sorted, center - h, side="right")
    hi = np.searchsorted(z_sorted, center + h, side="left")
    return lo, hi


def local_linear_anchors(X_reg, Y, z, centers, bandwidths):
    """Local-linear multi-response fits at each center.

    Parameters
    ----------
    X_reg : (N, q) ndarray
        Regressor rows of the series.
    Y : (N, p) ndarray
        Response rows.
    z : (N,) ndarray
        Scalar smoothing variable per row.
    centers : (m,) ndarray
        Fit locations on the ``z`` axis.
    bandwidths : (m,) ndarray
        Strictly positive bandwidth per center.

    Returns
    -------
    coeffs : (m, 2q+2, p) ndarray
        Stacked WLS coefficients, NaN where the window is empty.
    conds : (m,) ndarray
        Condition number of each weighted Gram matrix.
    flags : (m,) uint8 ndarray
        0 clean, 1 ridge fallback, 2 empty window.
    wsums : (m,) ndarray
        Total kernel weight per center.
    """
    X_reg = np.ascontiguousarray(X_reg, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    centers = np.ascontiguousarray(centers, dtype=np.float64)
    bandwidths = np.ascontiguousarray(bandwidths, dtype=np.float64)

    N, q = X_reg.shape
    p = Y.shape[1]
    d = 2 * q + 2
    m = centers.shape[0]

    order = np.argsort(z, kind="stable")
    zs = z[order]

    coeffs = np.full((m, d, p), np.nan)
    conds = np.full(m, np.inf)
    flags = np.zeros(m, dtype=np.uint8)
    wsums = np.zeros(m)

    for a in range(m):
        c = centers[a]
        h = bandwidths[a]
        lo, hi = _window_bounds(zs, c, h)
        idx = order[lo:hi]
        if idx.size == 0:
            flags[a] = 2
            continue
        dz = z[idx] - c
        u = dz / h
        w = 0.75 * (1.0 - u * u) / h
        keep = w > 0
        if not np.any(keep):
            flags[a] = 2
            continue
        idx = idx[keep]
        dz = dz[keep]
        w = w[keep]
        wsums[a] = w.sum()

        Xw = X_reg[idx]
        E = np.empty((idx.size, d))
        E[:, 0] = 1.0
        E[:, 1 : q + 1] = Xw
        E[:, q + 1] = dz
        E[:, q + 2 :] = dz[:, None] * Xw

        Ew = E * w[:, None]
        gram = Ew.T @ E
        rhs = Ew.T @ Y[idx]

        sv = np.linalg.svd(gram, compute_uv=False)
        cond = np.inf if sv[-1] <= 0 else sv[0] / sv[-1]
        conds[a] = cond
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            ridge = RIDGE_SCALE * np.trace(gram) / d
            if ridge <= 0:
                ridge = RIDGE_SCALE
            gram = gram + ridge * np.eye(d)
            flags[a] = 1
        coeffs[a] = np.linalg.solve(gram, rhs)

    return coeffs, conds, flags, wsums


def beta_step2_system(X_reg, Y, X_lag, z, h, coeffs, valid):
    """Quadratic system for the index-direction update.

    With per-anchor local coefficients fixed, the objective is quadratic
    in the direction vector: ``Q(beta) = c0 - 2 b'beta + beta'G beta``.
    Accumulates ``G`` (q x q), ``b`` (q,) and the constant ``c0`` over all
    (anchor, row) pairs inside the kernel windows.

    ``valid`` masks anchors whose local fit exists (flag < 2).
    """
    X_reg = np.ascontiguousarray(X_reg, dtype=np.float64)
    Y = np.ascontiguousarray(Y, dtype=np.float64)
    X_lag = np.ascontiguousarray(X_lag, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.float64)

    N, q = X_reg.shape
    order = np.argsort(z, kind="stable")
    zs = z[order]

    G = np.zeros((q, q))
    b = np.zeros(q)
    c0 = 0.0

    for a in range(N):
        if not valid[a]:
            continue
        c = z[a]
        lo, hi = _window_bounds(zs, c, h)
        idx = order[lo:hi]
        if idx.size == 0:
            continue
        dz = z[idx] - c
        u = dz / h
        w = 0.75 * (1.0 - u * u) / h
        keep = w > 0
        if not np.any(keep):
            continue
        idx = idx[keep]
        w = w[keep]

        ca = coeffs[a]
        g_a = ca[0]
        A_a = ca[1 : q + 1]
        xi_a = ca[q + 1]
        B_a = ca[q + 2 :]

        Xw = X_reg[idx]
        E = Y[idx] - g_a[None, :] - Xw @ A_a
        M = xi_a[None, :] + Xw @ B_a

        mm = np.einsum("ij,ij->i", M, M)
        me = np.einsum("ij,ij->i", M, E)
        ee = np.einsum("ij,ij->i", E, E)

        D = X_lag[idx] - X_lag[a][None, :]
        Dw = D * (w * mm)[:, None]
        G += Dw.T @ D
        b += D.T @ (w * me)
        c0 += float(w @ ee)

    return G, b, c0


def garch_sigma2_path(alpha0, alpha, gamma, r2, init_alpha0, floor):
    """Conditional-variance recursion over a squared-residual series.

    ``init_alpha0=True``: all pre-series squared residuals and variances
    equal ``alpha0`` and the recursion runs from the first series point.
    ``init_alpha0=False`` (first-residual mode): the first ``max(m, s)``
    variances are the squared residuals themselves (floored at ``floor``)
    and the recursion runs after them.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    r2 = np.asarray(r2, dtype=np.float64)
    m = alpha.shape[0]
    s = gamma.shape[0]
    L = r2.shape[0]
    a_poly = np.concatenate(([1.0], -gamma))

    if init_alpha0:
        r2_ext = np.concatenate((np.full(m, alpha0), r2))
        ar = np.convolve(r2_ext, alpha)[m - 1 : m - 1 + L] if m > 0 else np.zeros(L)
        drive = alpha0 + ar
        if s > 0:
            zi = lfiltic([1.0], a_poly, np.full(s, alpha0))
            sigma2, _ = lfilter([1.0], a_poly, drive, zi=zi)
        else:
            sigma2 = drive
        return sigma2

    k0 = min(max(m, s), L)
    sigma2 = np.empty(L)
    sigma2[:k0] = np.maximum(r2[:k0], floor)
    if k0 >= L:
        return sigma2
    ar_full = np.convolve(r2, alpha) if m > 0 else np.zeros(L)
    drive = alpha0 + ar_full[k0 - 1 : L - 1] if m > 0 else np.full(L - k0, alpha0)
    if s > 0:
        past = sigma2[max(k0 - s, 0) : k0][::-1]
        zi = lfiltic([1.0], a_poly, past)
        tail, _ = lfilter([1.0], a_poly, drive, zi=zi)
    else:
        tail = drive
    sigma2[k0:] = tail
    return sigma2


def garch_nll_terms(alpha0, alpha, gamma, r2, init_alpha0, floor):
    """Sum of ``r2_t / sigma2_t + log sigma2_t`` over the series."""
    sigma2 = garch_sigma2_path(alpha0, alpha, gamma, r2, init_alpha0, floor)
    return float(np.sum(r2 / sigma2 + np.log(sigma2)))


def nw_moments(X_lag, X_next, u, h2):
    """Kernel-weighted first and second moments of ``X_next`` near ``u``.

    Weights are Epanechnikov in the Euclidean distance ``||X_lag - u||``
    with bandwidth ``h2``. Returns (mean, second_moment, weight_sum);
    mean and second moment are NaN-filled when no weight falls in the
    window.
    """
    X_lag = np.asarray(X_lag, dtype=np.float64)
    X_next = np.asarray(X_next, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    q = X_lag.shape[1]
    dist = np.sqrt(np.sum((X_lag - u[None, :]) ** 2, axis=1))
    v = dist / h2
    w = np.where(v < 1.0, 0.75 * (1.0 - v * v) / h2, 0.0)
    wsum = float(w.sum())
    if wsum <= 0:
        return np.full(q, np.nan), np.full((q, q), np.nan), 0.0
    mean = (w[:, None] * X_next).sum(axis=0) / wsum
    second = (X_next * w[:, None]).T @ X_next / wsum
    return mean, second, wsum
