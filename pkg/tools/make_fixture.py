"""Generate the committed synthetic daily fixture pair in French layout.

Writes a 49-industry raw-return file and a 3-factor file covering two
calendar years of business days. Values are drawn from a seeded
three-factor model with mildly persistent idiosyncratic volatility and
rounded the way the real files are. A few cells carry the -99.99/-999
missing-value sentinels so the loader's drop path stays exercised, and
the industry file ends with a second section that parsers must ignore.

Run from the repository root:

    python3 tools/make_fixture.py [--outdir tests/fixtures]
"""

import argparse
import os

import numpy as np
import pandas as pd

INDUSTRY_NAMES = [
    "Agric", "Food", "Soda", "Beer", "Smoke", "Toys", "Fun", "Books",
    "Hshld", "Clths", "Hlth", "MedEq", "Drugs", "Chems", "Rubbr", "Txtls",
    "BldMt", "Cnstr", "Steel", "FabPr", "Mach", "ElcEq", "Autos", "Aero",
    "Ships", "Guns", "Gold", "Mines", "Coal", "Oil", "Util", "Telcm",
    "PerSv", "BusSv", "Hardw", "Softw", "Chips", "LabEq", "Paper", "Boxes",
    "Trans", "Whlsl", "Rtail", "Meals", "Banks", "Insur", "RlEst", "Fin",
    "Other",
]

SEED = 20030102


def synthesize(seed=SEED):
    rng = np.random.default_rng(seed)
    dates = pd.bdate_range("2003-01-02", "2004-12-31")
    t = len(dates)
    p = len(INDUSTRY_NAMES)

    mkt_rf = 0.03 + 1.00 * rng.standard_normal(t)
    smb = 0.01 + 0.45 * rng.standard_normal(t)
    hml = 0.01 + 0.40 * rng.standard_normal(t)
    rf = np.full(t, 0.007)

    alpha = rng.uniform(-0.02, 0.02, size=p)
    b_mkt = rng.uniform(0.5, 1.5, size=p)
    b_smb = rng.uniform(-0.5, 0.8, size=p)
    b_hml = rng.uniform(-0.5, 0.8, size=p)

    target_var = rng.uniform(0.3, 1.2, size=p)
    omega = 0.1 * target_var
    sigma2 = target_var.copy()
    eps = np.empty((t, p))
    z = rng.standard_normal((t, p))
    for i in range(t):
        eps[i] = np.sqrt(sigma2) * z[i]
        sigma2 = omega + 0.1 * eps[i] ** 2 + 0.8 * sigma2

    raw = (
        rf[:, None]
        + alpha
        + np.outer(mkt_rf, b_mkt)
        + np.outer(smb, b_smb)
        + np.outer(hml, b_hml)
        + eps
    )
    return dates, np.round(raw, 2), np.round(mkt_rf, 2), np.round(smb, 2), np.round(hml, 2), rf


def _date_token(date):
    return date.strftime("%Y%m%d")


def write_industry(path, dates, raw):
    lines = [
        "  Synthetic test fixture: 49 Industry Portfolios, daily",
        "  Value-weighted raw returns in percent; missing data are -99.99 or -999.",
        "",
        "  Average Value Weighted Returns -- Daily",
        "," + ",".join(INDUSTRY_NAMES),
    ]
    values = raw.copy()
    # Plant sentinel cells on fixed rows so the drop path is exercised.
    values[115, 3] = -99.99
    values[300, 40] = -999.0
    for date, row in zip(dates, values):
        cells = ",".join(f"{v:7.2f}" for v in row)
        lines.append(f"{_date_token(date)},{cells}")
    lines.append("")
    lines.append("  Average Equal Weighted Returns -- Daily")
    lines.append("," + ",".join(INDUSTRY_NAMES))
    for date, row in zip(dates[:2], values[:2]):
        cells = ",".join(f"{v:7.2f}" for v in (row * 0.5))
        lines.append(f"{_date_token(date)},{cells}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_factors(path, dates, mkt_rf, smb, hml, rf):
    lines = [
        "  Synthetic test fixture: daily three-factor file, percent units",
        "",
        ",Mkt-RF,SMB,HML,RF",
    ]
    mkt_rf = mkt_rf.copy()
    mkt_rf[180] = -99.99  # sentinel day in the factor file too
    for i, date in enumerate(dates):
        lines.append(
            f"{_date_token(date)},{mkt_rf[i]:7.2f},{smb[i]:7.2f},"
            f"{hml[i]:7.2f},{rf[i]:6.3f}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", default="tests/fixtures")
    parser.add_argument("--seed", type=int, default=SEED)
    args = parser.parse_args()
    os.makedirs(args.outdir, exist_ok=True)
    dates, raw, mkt_rf, smb, hml, rf = synthesize(args.seed)
    write_industry(os.path.join(args.outdir, "daily_industry49.csv"), dates, raw)
    write_factors(os.path.join(args.outdir, "daily_factors3.csv"), dates, mkt_rf, smb, hml, rf)
    print(f"wrote {len(dates)} rows to {args.outdir}")


if __name__ == "__main__":
    main()
