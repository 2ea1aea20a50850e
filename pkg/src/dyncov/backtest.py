"""Rolling daily backtest with a per-day refit over a trailing window.

Four strategies: ``face`` refits the dynamic covariance pipeline each
day, ``sam`` uses the window sample covariance, ``fan`` a static factor
covariance, and ``market`` holds the market factor plus the risk-free
rate. Portfolio returns for the weighted strategies are excess returns
w'Y_t in percent and are compounded directly; the per-year Sharpe ratio
subtracts the risk-free rate from every strategy's return series.

Balances restart at 100 on the first trading day of each calendar year.
On an estimation failure the strategy keeps its previous weights (equal
weights if none exist yet) and the day is flagged in the ledger.
"""

import hashlib
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .covariance import markowitz_weights, sample_covariance, static_factor_covariance
from .errors import (
    DyncovError,
    InsufficientDataError,
    InvalidArgumentError,
)
from .pipeline import PipelineConfig, fit_pipeline, predict_next

__all__ = [
    "STRATEGIES",
    "BacktestResult",
    "run_backtest",
    "verify_ledger",
]

STRATEGIES = ("face", "sam", "fan", "market")

LEDGER_COLUMNS = [
    "date",
    "strategy",
    "portfolio_return",
    "risk_free",
    "balance",
    "weight_hash",
    "held_over",
]

_MARKET_HASH = hashlib.sha256(b"market").hexdigest()[:12]


@dataclass
class BacktestResult:
    """Per-day ledger, per-year summary, and recorded failures."""

    ledger: pd.DataFrame
    yearly: pd.DataFrame
    failures: list = field(default_factory=list)
    weights: dict = field(default_factory=dict)


def _weight_hash(weights):
    data = np.ascontiguousarray(weights, dtype=np.float64).tobytes()
    return hashlib.sha256(data).hexdigest()[:12]


def _strategy_weights(name, window_returns, window_factors, delta, pipeline_config):
    if name == "face":
        fit = fit_pipeline(window_returns, window_factors, pipeline_config)
        cov, mu = predict_next(fit)
        return markowitz_weights(cov.matrix, mu, delta).weights
    mean = window_returns.mean(axis=0)
    if name == "sam":
        return markowitz_weights(sample_covariance(window_returns), mean, delta).weights
    if name == "fan":
        cov = static_factor_covariance(window_returns, window_factors)
        return markowitz_weights(cov, mean, delta).weights
    raise InvalidArgumentError(f"unknown strategy {name!r}")


def _year_of(date):
    return int(np.datetime64(date, "Y").astype(int)) + 1970


def run_backtest(
    dataset,
    lookback,
    delta=1.0,
    strategies=STRATEGIES,
    years=None,
    pipeline_config=None,
    keep_weights=False,
):
    """Walk the dataset day by day refitting each strategy.

    Day ``i`` is traded with weights fitted on the trailing window
    ``[i - lookback, i)``. ``years`` restricts traded days to the given
    calendar years (the window may reach back further). Returns a
    BacktestResult whose ledger has one row per traded day per strategy,
    in input strategy order within each day.
    """
    if lookback < 2:
        raise InvalidArgumentError("lookback must be at least 2")
    strategies = tuple(strategies)
    if not strategies:
        raise InvalidArgumentError("no strategies requested")
    unknown = [s for s in strategies if s not in STRATEGIES]
    if unknown:
        raise InvalidArgumentError(f"unknown strategies: {unknown}")
    if len(set(strategies)) != len(strategies):
        raise InvalidArgumentError("duplicate strategies requested")
    if pipeline_config is None:
        pipeline_config = PipelineConfig()

    n = len(dataset)
    if lookback >= n:
        raise InsufficientDataError(
            f"lookback {lookback} leaves no trading day in a dataset of {n} rows"
        )
    year_filter = None if years is None else {int(y) for y in years}
    day_years = np.array([_year_of(d) for d in dataset.dates], dtype=int)
    trade_idx = [
        i
        for i in range(lookback, n)
        if year_filter is None or day_years[i] in year_filter
    ]
    if not trade_idx:
        raise InsufficientDataError("no trading days after lookback and year filter")

    p = dataset.returns.shape[1]
    prev_weights = {s: None for s in strategies}
    balance = {s: None for s in strategies}
    prev_year = {s: None for s in strategies}
    rows = []
    failures = []
    weight_rows = {s: [] for s in strategies if s != "market"}

    for i in trade_idx:
        date = dataset.dates[i]
        year = int(day_years[i])
        rf = float(dataset.risk_free[i])
        y_today = dataset.returns[i]
        window_returns = dataset.returns[i - lookback : i]
        window_factors = dataset.factors[i - lookback : i]

        for name in strategies:
            if name == "market":
                ret = float(dataset.factors[i, 0] + rf)
                whash = _MARKET_HASH
                held_over = False
            else:
                held_over = False
                try:
                    w = _strategy_weights(
                        name, window_returns, window_factors, delta, pipeline_config
                    )
                    if not np.all(np.isfinite(w)):
                        raise DyncovError("non-finite weights")
                except (DyncovError, np.linalg.LinAlgError) as exc:
                    failures.append(
                        {"date": date, "strategy": name, "error": str(exc)}
                    )
                    held_over = True
                    w = (
                        prev_weights[name]
                        if prev_weights[name] is not None
                        else np.full(p, 1.0 / p)
                    )
                prev_weights[name] = w
                ret = float(w @ y_today)
                whash = _weight_hash(w)
                if keep_weights:
                    weight_rows[name].append((date, w.copy()))

            if prev_year[name] != year:
                balance[name] = 100.0
                prev_year[name] = year
            balance[name] = balance[name] * (1.0 + ret / 100.0)
            rows.append(
                {
                    "date": date,
                    "strategy": name,
                    "portfolio_return": ret,
                    "risk_free": rf,
                    "balance": balance[name],
                    "weight_hash": whash,
                    "held_over": held_over,
                }
            )

    ledger = pd.DataFrame(rows, columns=LEDGER_COLUMNS)
    yearly = _yearly_summary(ledger, strategies)
    weights = {}
    if keep_weights:
        for name, pairs in weight_rows.items():
            if pairs:
                weights[name] = pd.DataFrame(
                    [w for _, w in pairs],
                    index=pd.Index([d for d, _ in pairs], name="date"),
                    columns=list(dataset.asset_names),
                )
    return BacktestResult(ledger=ledger, yearly=yearly, failures=failures, weights=weights)


def _yearly_summary(ledger, strategies):
    frame = ledger.copy()
    frame["year"] = [_year_of(d) for d in frame["date"]]
    out = []
    for name in strategies:
        block = frame[frame["strategy"] == name]
        for year, gyear in block.groupby("year", sort=True):
            excess = gyear["portfolio_return"].to_numpy() - gyear["risk_free"].to_numpy()
            t = len(gyear)
            sd = float(np.std(excess, ddof=1)) if t > 1 else np.nan
            # Sharpe is undefined on a degenerate (constant) return year.
            if sd and np.isfinite(sd) and sd > 0:
                sharpe = float(np.mean(excess) / sd * np.sqrt(t))
            else:
                sharpe = np.nan
            out.append(
                {
                    "strategy": name,
                    "year": int(year),
                    "n_days": t,
                    "final_balance": float(gyear["balance"].iloc[-1]),
                    "sharpe_annualized": sharpe,
                    "n_held_over": int(gyear["held_over"].sum()),
                }
            )
    return pd.DataFrame(
        out,
        columns=[
            "strategy",
            "year",
            "n_days",
            "final_balance",
            "sharpe_annualized",
            "n_held_over",
        ],
    )


def verify_ledger(ledger):
    """Recompute every balance path from the recorded returns.

    Repeats the compounding arithmetic in ledger order and demands exact
    float equality with the stored balances, restarting at 100 whenever
    the calendar year changes. Returns the number of rows checked.
    """
    checked = 0
    for name, block in ledger.groupby("strategy", sort=False):
        bal = None
        year = None
        for row in block.itertuples(index=False):
            row_year = _year_of(row.date)
            if year != row_year:
                bal = 100.0
                year = row_year
            bal = bal * (1.0 + row.portfolio_return / 100.0)
            if bal != row.balance:
                raise DyncovError(
                    f"ledger conservation violated for {name} on {row.date}: "
                    f"{bal!r} != {row.balance!r}"
                )
            checked += 1
    return checked
