"""End-to-end checks of the ``python -m dyncov`` command line.

Every test drives a real subprocess so argument parsing, config
injection, file IO, and exit codes are exercised exactly as a user
would hit them. Numeric fidelity is checked by comparing CLI output
against an in-process library fit: the CSV writer uses %.17g and the
reader parses with round-trip precision, so the match must be exact,
not approximate.
"""

import json
import os
import subprocess
import sys

import numpy as np
import pandas as pd
import pytest

from dyncov.backtest import LEDGER_COLUMNS
from dyncov.pipeline import fit_pipeline, predict_next
from dyncov.simulate import SimulationConfig, simulate_dgp

PANEL = SimulationConfig(n=80, p=3, master_seed=5)


def _run(args, cwd):
    return subprocess.run(
        [sys.executable, "-m", "dyncov", *args],
        capture_output=True,
        text=True,
        cwd=str(cwd),
    )


@pytest.fixture(scope="module")
def panel_dir(tmp_path_factory):
    """Generic-layout returns/factors CSVs written by the CLI itself."""
    workdir = tmp_path_factory.mktemp("panel")
    proc = _run(
        [
            "simulate",
            "--n", str(PANEL.n),
            "--p", str(PANEL.p),
            "--seed", str(PANEL.master_seed),
            "--dump-data", "panel",
        ],
        workdir,
    )
    assert proc.returncode == 0, proc.stderr
    assert (workdir / "panel.returns.csv").is_file()
    assert (workdir / "panel.factors.csv").is_file()
    return workdir


def _panel_args(workdir):
    return [
        "--returns", str(workdir / "panel.returns.csv"),
        "--factors", str(workdir / "panel.factors.csv"),
        "--layout", "generic",
    ]


def test_simulate_reruns_byte_identical(tmp_path):
    args = [
        "simulate",
        "--n", "50", "--p", "3", "--reps", "2", "--seed", "3",
        "--out", "study.json",
    ]
    for sub in ("a", "b"):
        d = tmp_path / sub
        d.mkdir()
        proc = _run(args, d)
        assert proc.returncode == 0, proc.stderr
    for name in ("study.json", "study.json.meta.json"):
        first = (tmp_path / "a" / name).read_bytes()
        second = (tmp_path / "b" / name).read_bytes()
        assert first == second

    meta = json.loads((tmp_path / "a" / "study.json.meta.json").read_text())
    assert set(meta) == {"command", "backend", "versions", "params"}
    assert meta["command"] == "simulate"
    assert meta["params"]["n"] == 50


def test_simulate_csv_writes_aggregate_side_file(tmp_path):
    proc = _run(
        [
            "simulate",
            "--n", "50", "--p", "3", "--reps", "2", "--seed", "3",
            "--out", "study.csv",
        ],
        tmp_path,
    )
    assert proc.returncode == 0, proc.stderr
    records = pd.read_csv(tmp_path / "study.csv")
    assert len(records) == 2
    assert "delta_cov" in records.columns
    agg = json.loads((tmp_path / "study.aggregate.json").read_text())
    assert agg["failures"] == []
    assert agg["aggregate"]["n_ok"] == 2
    assert (tmp_path / "study.csv.meta.json").is_file()


def test_estimate_json_matches_library_fit(panel_dir):
    proc = _run(
        ["estimate", *_panel_args(panel_dir), "--out", "est.json"],
        panel_dir,
    )
    assert proc.returncode == 0, proc.stderr
    payload = json.loads((panel_dir / "est.json").read_text())

    # refit in process on the same draw; the CSV round trip is exact so
    # the fitted numbers must agree to the last bit
    data, _ = simulate_dgp(PANEL, replication_seed=0)
    fit = fit_pipeline(data.returns, data.factors)
    cov, mu = predict_next(fit)

    factor_names = pd.read_csv(panel_dir / "panel.factors.csv", nrows=0).columns[1:]
    cli_beta = [payload["beta"][name] for name in factor_names]
    assert cli_beta == list(fit.beta.beta)
    assert payload["diagnostics"]["selected_k"] == fit.selected_k
    assert payload["diagnostics"]["n_obs"] == fit.n_obs
    assert payload["covariance"] == cov.matrix.tolist()
    asset_names = payload["asset_names"]
    assert [payload["mean"][name] for name in asset_names] == list(mu)


def test_estimate_csv_side_files(panel_dir):
    proc = _run(
        ["estimate", *_panel_args(panel_dir), "--grid", "25", "--out", "est.csv"],
        panel_dir,
    )
    assert proc.returncode == 0, proc.stderr
    for name in ("est.csv", "est.beta.csv", "est.garch.csv", "est.cov.csv",
                 "est.mean.csv", "est.csv.meta.json"):
        assert (panel_dir / name).is_file(), name

    curves = pd.read_csv(panel_dir / "est.csv")
    assert list(curves.columns[:3]) == ["u", "asset_id", "g"]
    assert len(curves) == 25 * PANEL.p

    beta = pd.read_csv(panel_dir / "est.beta.csv")
    assert list(beta.columns) == ["factor", "beta"]
    assert len(beta) == PANEL.q

    cov = pd.read_csv(panel_dir / "est.cov.csv")
    assert cov.shape == (PANEL.p, PANEL.p + 1)
    assert cov.columns[0] == "asset_id"


def test_config_file_merging(tmp_path):
    cfg = tmp_path / "study.cfg"
    cfg.write_text(
        "n = 40\n"
        "p=3\n"
        "reps = 1\n"
        "delta = 0.5  # file value survives unless a flag overrides it\n"
        "\n"
        "out = study.json\n"
    )
    # --n on the command line must beat the file entry
    proc = _run(["simulate", "--config", str(cfg), "--n", "50"], tmp_path)
    assert proc.returncode == 0, proc.stderr
    meta = json.loads((tmp_path / "study.json.meta.json").read_text())
    assert meta["params"]["n"] == 50
    assert meta["params"]["p"] == 3
    assert meta["params"]["delta"] == 0.5


def test_missing_input_file_exits_2(tmp_path):
    proc = _run(
        [
            "estimate",
            "--returns", "nope.csv", "--factors", "nope2.csv",
            "--layout", "generic", "--out", "x.json",
        ],
        tmp_path,
    )
    assert proc.returncode == 2
    assert "file not found" in proc.stderr


def test_unknown_flag_exits_2(tmp_path):
    proc = _run(["simulate", "--bogus", "1", "--out", "x.json"], tmp_path)
    assert proc.returncode == 2


def test_no_subcommand_exits_2(tmp_path):
    proc = _run([], tmp_path)
    assert proc.returncode == 2


def test_bad_output_extension_exits_2(panel_dir):
    proc = _run(
        ["allocate", *_panel_args(panel_dir), "--out", "w.txt"],
        panel_dir,
    )
    assert proc.returncode == 2
    assert "unsupported output extension" in proc.stderr


def test_disjoint_dates_exit_1(tmp_path):
    (tmp_path / "r.csv").write_text("date,A\n20000103,0.5\n20000104,0.1\n")
    (tmp_path / "f.csv").write_text("date,f1\n20010103,0.2\n20010104,0.3\n")
    proc = _run(
        [
            "estimate",
            "--returns", "r.csv", "--factors", "f.csv",
            "--layout", "generic", "--out", "x.json",
        ],
        tmp_path,
    )
    assert proc.returncode == 1
    assert "share no dates" in proc.stderr


def test_backtest_csv_outputs(panel_dir):
    proc = _run(
        [
            "backtest", *_panel_args(panel_dir),
            "--lookback", "60", "--strategies", "sam,market",
            "--out", "bt.csv",
        ],
        panel_dir,
    )
    assert proc.returncode == 0, proc.stderr

    n_rows = len(pd.read_csv(panel_dir / "panel.returns.csv"))
    ledger = pd.read_csv(panel_dir / "bt.csv", float_precision="round_trip")
    assert list(ledger.columns) == LEDGER_COLUMNS
    assert set(ledger["strategy"]) == {"sam", "market"}
    assert len(ledger) == 2 * (n_rows - 60)

    # round_trip here too: the default parser can land one ulp off
    yearly = pd.read_csv(panel_dir / "bt.yearly.csv", float_precision="round_trip")
    assert list(yearly.columns) == [
        "strategy", "year", "n_days", "final_balance", "sharpe_annualized",
        "n_held_over",
    ]
    # the ledger's closing balance per strategy matches the final yearly row
    for name in ("sam", "market"):
        lines = ledger[ledger["strategy"] == name]
        summary = yearly[yearly["strategy"] == name]
        assert lines["balance"].iloc[-1] == summary["final_balance"].iloc[-1]
    assert (panel_dir / "bt.csv.meta.json").is_file()


def test_allocate_json_and_csv(panel_dir):
    proc = _run(
        ["allocate", *_panel_args(panel_dir), "--delta", "1.0",
         "--out", "w.json"],
        panel_dir,
    )
    assert proc.returncode == 0, proc.stderr
    payload = json.loads((panel_dir / "w.json").read_text())
    weights = payload["weights"]
    assert len(weights) == PANEL.p
    assert sum(weights.values()) == pytest.approx(1.0, abs=1e-8)
    assert isinstance(payload["expected_return"], float)
    assert isinstance(payload["psd_repaired"], bool)

    proc = _run(
        ["allocate", *_panel_args(panel_dir), "--delta", "1.0",
         "--out", "w.csv"],
        panel_dir,
    )
    assert proc.returncode == 0, proc.stderr
    frame = pd.read_csv(panel_dir / "w.csv", float_precision="round_trip")
    assert list(frame.columns) == ["asset_id", "weight"]
    assert len(frame) == PANEL.p
    assert frame["weight"].to_numpy().sum() == pytest.approx(1.0, abs=1e-8)
