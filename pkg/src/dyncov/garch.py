"""Univariate GARCH(m, s) fitting for the idiosyncratic residual series.

Each asset's residual series gets its own conditional-variance recursion

    sigma2_t = alpha0 + sum_i alpha_i r2_{t-i} + sum_j gamma_j sigma2_{t-j}

fit by Gaussian quasi-maximum likelihood. The average-likelihood
objective is ``(1/(L+1)) * sum_t (r2_t / sigma2_t + log sigma2_t)`` over
the ``L`` residuals. Two recursion initializations are supported:

* ``alpha0``: all pre-series squared residuals and variances equal
  ``alpha0`` (the default);
* ``first_residual``: the first ``max(m, s)`` variances equal the
  squared residuals themselves (floored away from zero), recursion after.

Parameters live in a compact box: every component at least ``FLOOR`` and
``sum(alpha) + sum(gamma) <= 1 - STATIONARITY_MARGIN``. The fit runs a
deterministic three-point multistart of a constrained quasi-Newton
optimizer (SLSQP: the stationarity cap is a linear constraint a plain
box cannot express).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.optimize import minimize

from . import _backend
from .errors import FitFailureError, InsufficientDataError, InvalidArgumentError

__all__ = [
    "FLOOR",
    "STATIONARITY_MARGIN",
    "GarchParams",
    "GarchFit",
    "variance_recursion",
    "nll_eval",
    "qmle_fit",
    "forecast_sigma2",
    "fits_frame",
]

FLOOR = 1e-6
STATIONARITY_MARGIN = 1e-6

INIT_MODES = ("alpha0", "first_residual")

# Deterministic multistart: (total ARCH mass, total GARCH mass) pairs.
_START_MASSES = ((0.10, 0.30), (0.05, 0.80), (0.05, 0.05))


@dataclass(frozen=True)
class GarchParams:
    """Box-valid GARCH parameters.

    alpha0 is the variance intercept; ``alpha`` the ARCH coefficients
    (length m), ``gamma`` the GARCH coefficients (length s).
    """

    alpha0: float
    alpha: np.ndarray
    gamma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.atleast_1d(np.asarray(self.alpha, float)))
        object.__setattr__(self, "gamma", np.atleast_1d(np.asarray(self.gamma, float)))
        vals = np.concatenate(([self.alpha0], self.alpha, self.gamma))
        if not np.all(np.isfinite(vals)):
            raise InvalidArgumentError("GARCH parameters must be finite")
        if np.any(vals < FLOOR):
            raise InvalidArgumentError(
                f"every GARCH parameter must be >= {FLOOR} (the box floor)"
            )
        if self.alpha.sum() + self.gamma.sum() > 1.0 - STATIONARITY_MARGIN:
            raise InvalidArgumentError(
                "sum(alpha) + sum(gamma) exceeds the stationarity cap "
                f"1 - {STATIONARITY_MARGIN}"
            )

    @property
    def m(self):
        return self.alpha.shape[0]

    @property
    def s(self):
        return self.gamma.shape[0]


@dataclass
class GarchFit:
    params: GarchParams
    nll: float
    sigma2_path: np.ndarray
    converged: bool
    init_mode: str
    n_obs: int
    start_nlls: np.ndarray = field(default_factory=lambda: np.empty(0))
    messages: list = field(default_factory=list)


def _check_residuals(residuals):
    r = np.asarray(residuals, dtype=float).ravel()
    if r.size < 2:
        raise InsufficientDataError("need at least 2 residuals")
    if not np.all(np.isfinite(r)):
        raise InvalidArgumentError("residuals must be finite")
    return r


def _check_init_mode(init_mode):
    if init_mode not in INIT_MODES:
        raise InvalidArgumentError(f"init_mode must be one of {INIT_MODES}")
    return init_mode == "alpha0"


def variance_recursion(params, residuals, init_mode="alpha0"):
    """Conditional-variance path for a residual series under ``params``."""
    if not isinstance(params, GarchParams):
        raise InvalidArgumentError("params must be a GarchParams instance")
    r = _check_residuals(residuals)
    init_alpha0 = _check_init_mode(init_mode)
    return _backend.garch_sigma2_path(
        params.alpha0, params.alpha, params.gamma, r * r, init_alpha0, FLOOR
    )


def nll_eval(params, residuals, init_mode="alpha0"):
    """Average Gaussian quasi-likelihood objective (lower is better)."""
    if not isinstance(params, GarchParams):
        raise InvalidArgumentError("params must be a GarchParams instance")
    r = _check_residuals(residuals)
    init_alpha0 = _check_init_mode(init_mode)
    terms = _backend.garch_nll_terms(
        params.alpha0, params.alpha, params.gamma, r * r, init_alpha0, FLOOR
    )
    return terms / (r.size + 1)


def _project_to_box(th, alpha0_hi):
    """Clip optimizer output back inside the parameter box.

    SLSQP can finish a hair outside its own bounds and inequality
    constraint. A plain proportional rescale of the slope block would
    drag entries sitting exactly on the floor below it, so floored
    entries stay put and only the free mass is shrunk, landing just
    below the cap so the validity check cannot round the sum past it.
    Returns (projected, cap_active).
    """
    th = np.clip(np.asarray(th, dtype=float), FLOOR, None)
    th[0] = min(th[0], alpha0_hi)
    cap = 1.0 - STATIONARITY_MARGIN
    # land 1e-12 below the cap: the validity check recomputes the sum
    # with its own grouping, so hitting the cap exactly is not safe
    slack = 1e-12
    slopes = th[1:]
    capped = slopes.sum() > cap - slack
    if capped:
        free = slopes > FLOOR
        target = cap - slack - FLOOR * np.count_nonzero(~free)
        slopes[free] *= target / slopes[free].sum()
    return th, capped


def qmle_fit(residuals, m=1, s=1, init_mode="alpha0"):
    """Fit GARCH(m, s) by constrained QMLE with deterministic multistart.

    Returns the best of three starts. ``converged`` reports whether the
    winning start's optimizer finished successfully; when every start
    fails outright a FitFailureError carrying the best iterate is raised.
    """
    r = _check_residuals(residuals)
    init_alpha0 = _check_init_mode(init_mode)
    if m < 1 or s < 0:
        raise InvalidArgumentError("need m >= 1 and s >= 0")
    L = r.size
    recommended = 50 * (m + s + 1)
    messages = []
    if L < recommended:
        msg = f"only {L} residuals for GARCH({m},{s}); {recommended} recommended"
        messages.append(msg)
        warnings.warn(msg, stacklevel=2)

    r2 = r * r
    v = float(r2.mean())
    if v <= 0:
        messages.append("residuals are identically zero; fit sits on the box floor")

    cap = 1.0 - STATIONARITY_MARGIN
    alpha0_hi = max(10.0 * v, 1.0)
    bounds = [(FLOOR, alpha0_hi)] + [(FLOOR, cap)] * (m + s)
    constraints = [
        {"type": "ineq", "fun": lambda th: cap - np.sum(th[1:])},
    ]

    def objective(th):
        return _backend.garch_nll_terms(
            th[0], th[1 : 1 + m], th[1 + m :], r2, init_alpha0, FLOOR
        ) / (L + 1)

    best = None
    start_nlls = np.full(len(_START_MASSES), np.nan)
    any_success = False
    for si, (a_mass, g_mass) in enumerate(_START_MASSES):
        th0 = np.empty(1 + m + s)
        th0[0] = np.clip(v * (1.0 - a_mass - g_mass), FLOOR, alpha0_hi)
        th0[1 : 1 + m] = a_mass / m
        th0[1 + m :] = g_mass / max(s, 1)
        try:
            with warnings.catch_warnings():
                # SLSQP routinely pokes outside the box and clips back.
                warnings.simplefilter("ignore", RuntimeWarning)
                res = minimize(
                    objective,
                    th0,
                    method="SLSQP",
                    bounds=bounds,
                    constraints=constraints,
                    options={"maxiter": 200, "ftol": 1e-10},
                )
        except (ValueError, FloatingPointError) as exc:  # optimizer blew up
            messages.append(f"start {si} raised {exc!r}")
            continue
        start_nlls[si] = res.fun
        if not np.isfinite(res.fun):
            continue
        if best is None or res.fun < best[0]:
            best = (float(res.fun), np.asarray(res.x, dtype=float), bool(res.success))
        any_success = any_success or bool(res.success)

    if best is None:
        raise FitFailureError(
            "all GARCH optimizer starts failed", best_fit={"messages": messages}
        )

    nll_best, th, success = best
    th, capped = _project_to_box(th, alpha0_hi)
    if capped:
        messages.append("stationarity cap active; slope block rescaled onto the cap")
    params = GarchParams(alpha0=th[0], alpha=th[1 : 1 + m], gamma=th[1 + m :])
    path = _backend.garch_sigma2_path(
        params.alpha0, params.alpha, params.gamma, r2, init_alpha0, FLOOR
    )
    return GarchFit(
        params=params,
        nll=float(objective(th)),
        sigma2_path=path,
        converged=success,
        init_mode=init_mode,
        n_obs=L,
        start_nlls=start_nlls,
        messages=messages,
    )


def forecast_sigma2(fit, recent_residuals):
    """One-step-ahead conditional variance from a fitted model.

    ``recent_residuals`` must hold at least the last ``m`` residuals of
    the fitted series (most recent last). The forecast is one more step
    of the recursion, hence always at least ``alpha0``.
    """
    p = fit.params
    r = np.asarray(recent_residuals, dtype=float).ravel()
    if r.size < p.m:
        raise InvalidArgumentError(f"need at least {p.m} recent residuals")
    out = p.alpha0
    for i in range(1, p.m + 1):
        out += p.alpha[i - 1] * r[-i] ** 2
    for j in range(1, p.s + 1):
        if fit.sigma2_path.size < j:
            raise InvalidArgumentError("sigma2 path shorter than the GARCH order")
        out += p.gamma[j - 1] * fit.sigma2_path[-j]
    return float(out)


def fits_frame(fits, asset_names=None):
    """Per-asset parameter table: asset_id, alpha0, alpha_i, gamma_j, nll, converged."""
    if asset_names is None:
        asset_names = [str(k) for k in range(len(fits))]
    rows = []
    for name, fit in zip(asset_names, fits):
        row = {"asset_id": name, "alpha0": fit.params.alpha0}
        for i, a in enumerate(fit.params.alpha, start=1):
            row[f"alpha_{i}"] = a
        for j, g in enumerate(fit.params.gamma, start=1):
            row[f"gamma_{j}"] = g
        row["nll"] = fit.nll
        row["converged"] = fit.converged
        rows.append(row)
    return pd.DataFrame(rows)
