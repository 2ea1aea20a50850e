"""Command line front end.

Subcommands: ``simulate`` (replication study on the synthetic generator),
``estimate`` (fit the pipeline on a dataset and emit the fitted pieces),
``backtest`` (rolling daily engine), ``allocate`` (one-shot weights for
the next day). Output format follows the --out extension (.csv or
.json); every run also writes ``<out>.meta.json`` with the resolved
parameters and library versions, and never a wall-clock timestamp, so
repeated runs produce byte-identical files.

A flat key=value config file may supply any flag of the active
subcommand; flags given on the command line win.
"""

import argparse
import json
import os
import sys

import numpy as np
import pandas as pd

from . import _backend
from .backtest import STRATEGIES, run_backtest
from .coefficients import curves_frame, fit_curves, interior_grid
from .covariance import markowitz_weights
from .data import Dataset, build_dataset, load_french_csv
from .errors import DyncovError
from .garch import INIT_MODES, fits_frame
from .index import IndexConfig
from .pipeline import PipelineConfig, fit_pipeline, predict_next
from .simulate import SimulationConfig, run_simulation_study, simulate_dgp
from .smoothing import knn_bandwidths

__all__ = ["main"]

_FLOAT_FMT = "%.17g"  # round-trips float64 exactly


class _UsageError(Exception):
    pass


def _require_file(path):
    if not os.path.isfile(path):
        raise _UsageError(f"file not found: {path}")
    return path


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonify(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.datetime64):
        return str(obj)
    return obj


def _dump_json(obj, path):
    with open(path, "w") as handle:
        json.dump(_jsonify(obj), handle, indent=2, sort_keys=True)
        handle.write("\n")


def _write_frame(frame, path):
    root, ext = os.path.splitext(path)
    if ext == ".csv":
        out = frame.copy()
        for col in out.columns:
            if out[col].dtype.kind == "M":
                out[col] = out[col].dt.strftime("%Y-%m-%d")
        out.to_csv(path, index=False, float_format=_FLOAT_FMT)
    elif ext == ".json":
        _dump_json(frame.to_dict(orient="records"), path)
    else:
        raise _UsageError(f"unsupported output extension {ext!r} (use .csv or .json)")


def _versions():
    import scipy

    from . import __version__

    vers = {
        "dyncov": __version__,
        "numpy": np.__version__,
        "pandas": pd.__version__,
        "scipy": scipy.__version__,
    }
    try:
        import numba

        vers["numba"] = numba.__version__
    except ImportError:
        pass
    return vers


def _write_meta(out_path, command, params):
    meta = {
        "command": command,
        "backend": _backend.backend_name(),
        "versions": _versions(),
        "params": params,
    }
    _dump_json(meta, f"{out_path}.meta.json")


def _read_config_flags(path):
    """Parse key=value lines into a flat flag list."""
    flags = []
    with open(path) as handle:
        for lineno, raw in enumerate(handle, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise _UsageError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            key = key.strip().replace("_", "-")
            if not key:
                raise _UsageError(f"{path}:{lineno}: empty key")
            flags.extend([f"--{key}", value.strip()])
    return flags


def _inject_config(argv):
    """Splice config-file flags in right after the subcommand.

    Flags typed on the command line come later in argv, and argparse
    lets the last occurrence win, so explicit flags override the file.
    """
    if not argv or argv[0].startswith("-"):
        return argv
    path = None
    rest = argv[1:]
    for pos, token in enumerate(rest):
        if token == "--config":
            if pos + 1 >= len(rest):
                raise _UsageError("--config needs a file path")
            path = rest[pos + 1]
        elif token.startswith("--config="):
            path = token.split("=", 1)[1]
    if path is None:
        return argv
    _require_file(path)
    return [argv[0]] + _read_config_flags(path) + rest


def _read_generic_csv(path):
    """Wide CSV with a YYYYMMDD ``date`` column and named float columns."""
    # round_trip: the file carries %.17g floats that must parse back exactly
    frame = pd.read_csv(path, float_precision="round_trip")
    if frame.shape[1] < 2 or frame.columns[0] != "date":
        raise DyncovError(f"{path}: expected a leading 'date' column")
    dates = pd.to_datetime(frame["date"].astype(str), format="%Y%m%d")
    values = frame.iloc[:, 1:].to_numpy(dtype=float)
    names = [str(c) for c in frame.columns[1:]]
    return dates.values.astype("datetime64[D]"), names, values


def _load_dataset(args):
    _require_file(args.returns)
    _require_file(args.factors)
    if args.layout == "french":
        industry = load_french_csv(args.returns, "industry49")
        factors = load_french_csv(args.factors, "factors3")
        return build_dataset(industry, factors)
    r_dates, r_names, r_values = _read_generic_csv(args.returns)
    f_dates, f_names, f_values = _read_generic_csv(args.factors)
    common, ri, fi = np.intersect1d(r_dates, f_dates, return_indices=True)
    if common.size == 0:
        raise DyncovError("returns and factors share no dates")
    return Dataset(
        dates=common,
        returns=r_values[ri],
        factors=f_values[fi],
        risk_free=np.zeros(common.size),
        asset_names=r_names,
        factor_names=f_names,
    )


def _pipeline_config(args):
    return PipelineConfig(
        index=IndexConfig(seed=args.seed),
        garch_m=args.garch_m,
        garch_s=args.garch_s,
        garch_init=args.init,
    )


def _dump_panel(prefix, dataset):
    """Write <prefix>.returns.csv / <prefix>.factors.csv (generic layout)."""
    date_col = pd.to_datetime(dataset.dates).strftime("%Y%m%d")
    for stem, names, values in (
        ("returns", dataset.asset_names, dataset.returns),
        ("factors", dataset.factor_names, dataset.factors),
    ):
        frame = pd.DataFrame(values, columns=list(names))
        frame.insert(0, "date", date_col)
        frame.to_csv(f"{prefix}.{stem}.csv", index=False, float_format=_FLOAT_FMT)


def _cmd_simulate(args):
    config = SimulationConfig(n=args.n, p=args.p, q=args.q, master_seed=args.seed)
    if args.dump_data:
        data, _ = simulate_dgp(config, 0)
        _dump_panel(args.dump_data, data)
    if args.out is None:
        if not args.dump_data:
            raise _UsageError("simulate needs --out or --dump-data")
        return 0
    study = run_simulation_study(
        config, args.reps, delta=args.delta, n_jobs=args.jobs
    )
    root, ext = os.path.splitext(args.out)
    if ext == ".json":
        _dump_json(
            {
                "records": study.records.to_dict(orient="records"),
                "aggregate": study.aggregate,
                "failures": study.failures,
            },
            args.out,
        )
    else:
        _write_frame(study.records, args.out)
        _dump_json(
            {"aggregate": study.aggregate, "failures": study.failures},
            f"{root}.aggregate.json",
        )
    _write_meta(
        args.out,
        "simulate",
        {
            "n": args.n,
            "p": args.p,
            "q": args.q,
            "reps": args.reps,
            "seed": args.seed,
            "delta": args.delta,
        },
    )
    return 0


def _estimate_tables(dataset, args):
    fit = fit_pipeline(dataset.returns, dataset.factors, _pipeline_config(args))
    cov, mu = predict_next(fit)

    beta_frame = pd.DataFrame(
        {"factor": list(dataset.factor_names), "beta": fit.beta.beta}
    )
    z = fit.field_in_sample.query_points
    grid = interior_grid(z, num=args.grid)
    k_grid = min(fit.selected_k, z.size - 1)
    bandwidths = knn_bandwidths(grid, z, max(1, k_grid))
    field = fit_curves(dataset.returns, dataset.factors, fit.beta, bandwidths, grid)
    curve_frame = curves_frame(field, dataset.asset_names)
    garch_frame = fits_frame(fit.garch_fits, dataset.asset_names)

    diagnostics = {
        "converged": fit.beta.converged,
        "iterations": fit.beta.iterations,
        "selected_k": fit.selected_k,
        "h2": fit.h2,
        "sigma_x_repaired": fit.sigma_x_repaired,
        "n_obs": fit.n_obs,
    }
    return fit, cov, mu, beta_frame, curve_frame, garch_frame, diagnostics


def _cmd_estimate(args):
    dataset = _load_dataset(args)
    fit, cov, mu, beta_frame, curve_frame, garch_frame, diag = _estimate_tables(
        dataset, args
    )
    root, ext = os.path.splitext(args.out)
    if ext == ".json":
        _dump_json(
            {
                "beta": dict(zip(dataset.factor_names, fit.beta.beta)),
                "diagnostics": diag,
                "curves": curve_frame.to_dict(orient="records"),
                "garch": garch_frame.to_dict(orient="records"),
                "covariance": cov.matrix,
                "mean": dict(zip(dataset.asset_names, mu)),
                "asset_names": list(dataset.asset_names),
            },
            args.out,
        )
    elif ext == ".csv":
        _write_frame(curve_frame, args.out)
        _write_frame(beta_frame, f"{root}.beta.csv")
        _write_frame(garch_frame, f"{root}.garch.csv")
        cov_frame = pd.DataFrame(
            cov.matrix, columns=list(dataset.asset_names)
        )
        cov_frame.insert(0, "asset_id", list(dataset.asset_names))
        _write_frame(cov_frame, f"{root}.cov.csv")
        _write_frame(
            pd.DataFrame({"asset_id": list(dataset.asset_names), "mean": mu}),
            f"{root}.mean.csv",
        )
    else:
        raise _UsageError(f"unsupported output extension {ext!r} (use .csv or .json)")
    _write_meta(
        args.out,
        "estimate",
        {
            "returns": args.returns,
            "factors": args.factors,
            "layout": args.layout,
            "seed": args.seed,
            "grid": args.grid,
            "garch_m": args.garch_m,
            "garch_s": args.garch_s,
            "init": args.init,
            "diagnostics": diag,
        },
    )
    return 0


def _cmd_backtest(args):
    dataset = _load_dataset(args)
    strategies = tuple(s.strip() for s in args.strategies.split(",") if s.strip())
    years = None
    if args.years:
        years = [int(y) for y in args.years.split(",") if y.strip()]
    result = run_backtest(
        dataset,
        lookback=args.lookback,
        delta=args.delta,
        strategies=strategies,
        years=years,
        pipeline_config=_pipeline_config(args),
    )
    root, ext = os.path.splitext(args.out)
    if ext == ".json":
        ledger = result.ledger.copy()
        ledger["date"] = [str(d) for d in ledger["date"]]
        _dump_json(
            {
                "ledger": ledger.to_dict(orient="records"),
                "yearly": result.yearly.to_dict(orient="records"),
                "failures": result.failures,
            },
            args.out,
        )
    elif ext == ".csv":
        _write_frame(result.ledger, args.out)
        _write_frame(result.yearly, f"{root}.yearly.csv")
    else:
        raise _UsageError(f"unsupported output extension {ext!r} (use .csv or .json)")
    _write_meta(
        args.out,
        "backtest",
        {
            "returns": args.returns,
            "factors": args.factors,
            "layout": args.layout,
            "lookback": args.lookback,
            "delta": args.delta,
            "strategies": list(strategies),
            "years": years,
            "seed": args.seed,
            "n_failures": len(result.failures),
        },
    )
    return 0


def _cmd_allocate(args):
    dataset = _load_dataset(args)
    fit = fit_pipeline(dataset.returns, dataset.factors, _pipeline_config(args))
    cov, mu = predict_next(fit)
    w = markowitz_weights(cov.matrix, mu, args.delta)
    root, ext = os.path.splitext(args.out)
    if ext == ".json":
        _dump_json(
            {
                "delta": args.delta,
                "weights": dict(zip(dataset.asset_names, w.weights)),
                "expected_return": float(w.weights @ mu),
                "psd_repaired": w.psd_repaired,
            },
            args.out,
        )
    elif ext == ".csv":
        _write_frame(
            pd.DataFrame(
                {"asset_id": list(dataset.asset_names), "weight": w.weights}
            ),
            args.out,
        )
    else:
        raise _UsageError(f"unsupported output extension {ext!r} (use .csv or .json)")
    _write_meta(
        args.out,
        "allocate",
        {
            "returns": args.returns,
            "factors": args.factors,
            "layout": args.layout,
            "delta": args.delta,
            "seed": args.seed,
        },
    )
    return 0


def _add_io_flags(sub):
    sub.add_argument("--returns", required=True, help="returns CSV")
    sub.add_argument("--factors", required=True, help="factors CSV")
    sub.add_argument(
        "--layout",
        choices=("french", "generic"),
        default="french",
        help="french: industry49 + factors3 files; generic: date,<names> CSVs",
    )


def _add_model_flags(sub):
    sub.add_argument("--seed", type=int, default=0, help="index-direction init seed")
    sub.add_argument("--garch-m", type=int, default=1)
    sub.add_argument("--garch-s", type=int, default=1)
    sub.add_argument("--init", choices=INIT_MODES, default="alpha0")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dyncov",
        description="Dynamic factor covariance: simulate, estimate, backtest, allocate.",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="replication study on the synthetic model")
    sim.add_argument("--n", type=int, default=200)
    sim.add_argument("--p", type=int, default=10)
    sim.add_argument("--q", type=int, default=4)
    sim.add_argument("--reps", type=int, default=1)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--delta", type=float, default=1.0)
    sim.add_argument("--jobs", type=int, default=1)
    sim.add_argument("--dump-data", default=None, metavar="PREFIX",
                     help="also write <PREFIX>.returns.csv/.factors.csv for rep 0")
    sim.add_argument("--out", default=None)
    sim.add_argument("--config", default=None)
    sim.set_defaults(func=_cmd_simulate)

    est = subs.add_parser("estimate", help="fit the pipeline and emit the pieces")
    _add_io_flags(est)
    _add_model_flags(est)
    est.add_argument("--grid", type=int, default=100, help="curve grid size")
    est.add_argument("--out", required=True)
    est.add_argument("--config", default=None)
    est.set_defaults(func=_cmd_estimate)

    bt = subs.add_parser("backtest", help="rolling daily backtest")
    _add_io_flags(bt)
    _add_model_flags(bt)
    bt.add_argument("--lookback", type=int, required=True)
    bt.add_argument("--delta", type=float, default=1.0)
    bt.add_argument("--years", default=None, help="comma-separated calendar years")
    bt.add_argument(
        "--strategies", default=",".join(STRATEGIES), help="comma-separated subset"
    )
    bt.add_argument("--out", required=True)
    bt.add_argument("--config", default=None)
    bt.set_defaults(func=_cmd_backtest)

    alloc = subs.add_parser("allocate", help="weights for the next day")
    _add_io_flags(alloc)
    _add_model_flags(alloc)
    alloc.add_argument("--delta", type=float, default=1.0)
    alloc.add_argument("--out", required=True)
    alloc.add_argument("--config", default=None)
    alloc.set_defaults(func=_cmd_allocate)
    return parser


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    try:
        argv = _inject_config(list(argv))
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DyncovError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
