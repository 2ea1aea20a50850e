"""Numba twins of the hot kernels in ``_kernels_numpy``.

Same signatures, same semantics, loop implementations compiled with
``@njit(cache=True)``. No ``fastmath``: accumulation order is fixed so
results are reproducible run to run on the same backend.
"""

import numpy as np
from numba import njit

CONDITION_LIMIT = 1e12
RIDGE_SCALE = 1e-8


@njit(cache=True)
def _local_linear_anchors_impl(X_reg, Y, z, centers, bandwidths):
    N, q = X_reg.shape
    p = Y.shape[1]
    d = 2 * q + 2
    m = centers.shape[0]

    order = np.argsort(z)
    zs = z[order]

    coeffs = np.full((m, d, p), np.nan)
    conds = np.full(m, np.inf)
    flags = np.zeros(m, dtype=np.uint8)
    wsums = np.zeros(m)

    f = np.empty(d)
    for a in range(m):
        c = centers[a]
        h = bandwidths[a]
        lo = np.searchsorted(zs, c - h, side="right")
        hi = np.searchsorted(zs, c + h, side="left")
        gram = np.zeros((d, d))
        rhs = np.zeros((d, p))
        wsum = 0.0
        for pos in range(lo, hi):
            t = order[pos]
            dz = z[t] - c
            u = dz / h
            w = 0.75 * (1.0 - u * u) / h
            if w <= 0.0:
                continue
            wsum += w
            f[0] = 1.0
            for r in range(q):
                f[1 + r] = X_reg[t, r]
                f[q + 2 + r] = dz * X_reg[t, r]
            f[q + 1] = dz
            for i in range(d):
                wf = w * f[i]
                for j in range(i, d):
                    gram[i, j] += wf * f[j]
                for k in range(p):
                    rhs[i, k] += wf * Y[t, k]
        if wsum <= 0.0:
            flags[a] = 2
            continue
        wsums[a] = wsum
        for i in range(d):
            for j in range(i):
                gram[i, j] = gram[j, i]

        sv = np.linalg.svd(gram)[1]
        if sv[d - 1] <= 0.0:
            cond = np.inf
        else:
            cond = sv[0] / sv[d - 1]
        conds[a] = cond
        if not np.isfinite(cond) or cond > CONDITION_LIMIT:
            tr = 0.0
            for i in range(d):
                tr += gram[i, i]
            ridge = RIDGE_SCALE * tr / d
            if ridge <= 0.0:
                ridge = RIDGE_SCALE
            for i in range(d):
                gram[i, i] += ridge
            flags[a] = 1
        coeffs[a] = np.linalg.solve(gram, rhs)

    return coeffs, conds, flags, wsums


def local_linear_anchors(X_reg, Y, z, centers, bandwidths):
    return _local_linear_anchors_impl(
        np.ascontiguousarray(X_reg, dtype=np.float64),
        np.ascontiguousarray(Y, dtype=np.float64),
        np.ascontiguousarray(z, dtype=np.float64),
        np.ascontiguousarray(centers, dtype=np.float64),
        np.ascontiguousarray(bandwidths, dtype=np.float64),
    )


@njit(cache=True)
def _beta_step2_system_impl(X_reg, Y, X_lag, z, h, coeffs, valid):
    N, q = X_reg.shape
    p = Y.shape[1]

    order = np.argsort(z)
    zs = z[order]

    G = np.zeros((q, q))
    b = np.zeros(q)
    c0 = 0.0
    dvec = np.empty(q)

    for a in range(N):
        if not valid[a]:
            continue
        c = z[a]
        lo = np.searchsorted(zs, c - h, side="right")
        hi = np.searchsorted(zs, c + h, side="left")
        for pos in range(lo, hi):
            t = order[pos]
            dz = z[t] - c
            u = dz / h
            w = 0.75 * (1.0 - u * u) / h
            if w <= 0.0:
                continue
            mm = 0.0
            me = 0.0
            ee = 0.0
            for k in range(p):
                ax = 0.0
                bx = 0.0
                for r in range(q):
                    x = X_reg[t, r]
                    ax += x * coeffs[a, 1 + r, k]
                    bx += x * coeffs[a, q + 2 + r, k]
                e_k = Y[t, k] - coeffs[a, 0, k] - ax
                m_k = coeffs[a, q + 1, k] + bx
                mm += m_k * m_k
                me += m_k * e_k
                ee += e_k * e_k
            for r in range(q):
                dvec[r] = X_lag[t, r] - X_lag[a, r]
            wmm = w * mm
            wme = w * me
            for i in range(q):
                for j in range(q):
                    G[i, j] += wmm * dvec[i] * dvec[j]
                b[i] += wme * dvec[i]
            c0 += w * ee
    return G, b, c0


def beta_step2_system(X_reg, Y, X_lag, z, h, coeffs, valid):
    return _beta_step2_system_impl(
        np.ascontiguousarray(X_reg, dtype=np.float64),
        np.ascontiguousarray(Y, dtype=np.float64),
        np.ascontiguousarray(X_lag, dtype=np.float64),
        np.ascontiguousarray(z, dtype=np.float64),
        float(h),
        np.ascontiguousarray(coeffs, dtype=np.float64),
        np.ascontiguousarray(valid, dtype=np.bool_),
    )


@njit(cache=True)
def _garch_sigma2_path_impl(alpha0, alpha, gamma, r2, init_alpha0, floor):
    m = alpha.shape[0]
    s = gamma.shape[0]
    L = r2.shape[0]
    sigma2 = np.empty(L)

    if init_alpha0:
        start = 0
    else:
        start = min(max(m, s), L)
        for t in range(start):
            v = r2[t]
            sigma2[t] = v if v > floor else floor

    for t in range(start, L):
        acc = alpha0
        for i in range(1, m + 1):
            ti = t - i
            past_r2 = r2[ti] if ti >= 0 else (alpha0 if init_alpha0 else 0.0)
            acc += alpha[i - 1] * past_r2
        for j in range(1, s + 1):
            tj = t - j
            past_s2 = sigma2[tj] if tj >= 0 else (alpha0 if init_alpha0 else 0.0)
            acc += gamma[j - 1] * past_s2
        sigma2[t] = acc
    return sigma2


def garch_sigma2_path(alpha0, alpha, gamma, r2, init_alpha0, floor):
    return _garch_sigma2_path_impl(
        float(alpha0),
        np.ascontiguousarray(alpha, dtype=np.float64),
        np.ascontiguousarray(gamma, dtype=np.float64),
        np.ascontiguousarray(r2, dtype=np.float64),
        bool(init_alpha0),
        float(floor),
    )


@njit(cache=True)
def _garch_nll_terms_impl(alpha0, alpha, gamma, r2, init_alpha0, floor):
    sigma2 = _garch_sigma2_path_impl(alpha0, alpha, gamma, r2, init_alpha0, floor)
    total = 0.0
    for t in range(r2.shape[0]):
        total += r2[t] / sigma2[t] + np.log(sigma2[t])
    return total


def garch_nll_terms(alpha0, alpha, gamma, r2, init_alpha0, floor):
    return float(
        _garch_nll_terms_impl(
            float(alpha0),
            np.ascontiguousarray(alpha, dtype=np.float64),
            np.ascontiguousarray(gamma, dtype=np.float64),
            np.ascontiguousarray(r2, dtype=np.float64),
            bool(init_alpha0),
            float(floor),
        )
    )


@njit(cache=True)
def _nw_moments_impl(X_lag, X_next, u, h2):
    n, q = X_lag.shape
    mean = np.zeros(q)
    second = np.zeros((q, q))
    wsum = 0.0
    for t in range(n):
        dist2 = 0.0
        for r in range(q):
            dr = X_lag[t, r] - u[r]
            dist2 += dr * dr
        v = np.sqrt(dist2) / h2
        if v >= 1.0:
            continue
        w = 0.75 * (1.0 - v * v) / h2
        if w <= 0.0:
            continue
        wsum += w
        for i in range(q):
            wx = w * X_next[t, i]
            mean[i] += wx
            for j in range(q):
                second[i, j] += wx * X_next[t, j]
    if wsum <= 0.0:
        mean[:] = np.nan
        second[:, :] = np.nan
        return mean, second, 0.0
    for i in range(q):
        mean[i] /= wsum
        for j in range(q):
            second[i, j] /= wsum
    return mean, second, wsum


def nw_moments(X_lag, X_next, u, h2):
    return _nw_moments_impl(
        np.ascontiguousarray(X_lag, dtype=np.float64),
        np.ascontiguousarray(X_next, dtype=np.float64),
        np.ascontiguousarray(u, dtype=np.float64),
        float(h2),
    )
