"""Loading of daily return files in the classic research-library layout.

Files are comma-separated with an optional textual preamble, a header row
whose first cell is blank (or "Date"), then data rows starting with a
YYYYMMDD date. Values are percent returns. The sentinels -99.99 and -999
mark missing values; any row containing one is dropped. Two layouts are
supported: ``industry49`` (49 industry portfolio columns) and
``factors3`` (Mkt-RF, SMB, HML, RF columns).

``build_dataset`` inner-joins an industry table with a factor table on
dates and converts industry returns to excess returns by subtracting the
risk-free column.
"""

import re
from dataclasses import dataclass

import numpy as np

from .errors import EmptyDatasetError, InvalidArgumentError, ParseError

__all__ = ["FrenchTable", "Dataset", "load_french_csv", "build_dataset"]

LAYOUTS = ("industry49", "factors3")
SENTINELS = (-99.99, -999.0)

_DATE_RE = re.compile(r"^\d{8}$")


@dataclass
class FrenchTable:
    """One parsed file: dates, column names, percent values."""

    dates: np.ndarray  # datetime64[D]
    names: list
    values: np.ndarray  # (T, ncol) float
    n_dropped: int = 0


@dataclass
class Dataset:
    """Aligned panel used by estimation, backtests, and simulation output.

    ``returns`` are excess returns in percent; ``factors`` percent;
    ``risk_free`` the percent risk-free rate per row.
    """

    dates: np.ndarray
    returns: np.ndarray
    factors: np.ndarray
    risk_free: np.ndarray
    asset_names: list
    factor_names: list

    def __len__(self):
        return self.dates.shape[0]


def _parse_date(token, line_number):
    if not _DATE_RE.match(token):
        raise ParseError(
            f"line {line_number}: expected YYYYMMDD date, got {token!r}",
            line_number=line_number,
        )
    year, month, day = int(token[:4]), int(token[4:6]), int(token[6:8])
    if not (1 <= month <= 12 and 1 <= day <= 31):
        raise ParseError(
            f"line {line_number}: implausible date {token!r}", line_number=line_number
        )
    return np.datetime64(f"{year:04d}-{month:02d}-{day:02d}", "D")


def load_french_csv(path, layout):
    """Parse one file of the given layout into a FrenchTable.

    Raises
    ------
    ParseError
        On missing header, wrong column count, or malformed cells (with
        the 1-based line number).
    EmptyDatasetError
        If the header exists but no usable data row follows.
    """
    if layout not in LAYOUTS:
        raise InvalidArgumentError(f"layout must be one of {LAYOUTS}")
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    header_idx = None
    names = None
    for i, line in enumerate(lines):
        cells = [c.strip() for c in line.split(",")]
        if len(cells) >= 2 and cells[0].lower() in ("", "date"):
            non_date = [c for c in cells[1:] if c]
            if non_date and not any(_DATE_RE.match(c) for c in non_date):
                header_idx = i
                names = non_date
                break
    if header_idx is None:
        raise ParseError("no header row found (first cell blank or 'Date')")

    if layout == "industry49" and len(names) != 49:
        raise ParseError(
            f"line {header_idx + 1}: industry49 layout needs 49 columns, "
            f"got {len(names)}",
            line_number=header_idx + 1,
        )
    if layout == "factors3":
        wanted = ["Mkt-RF", "SMB", "HML", "RF"]
        if [n.replace(" ", "") for n in names] != [w.replace(" ", "") for w in wanted]:
            raise ParseError(
                f"line {header_idx + 1}: factors3 layout needs columns {wanted}, "
                f"got {names}",
                line_number=header_idx + 1,
            )

    ncol = len(names)
    dates = []
    rows = []
    n_dropped = 0
    for offset, line in enumerate(lines[header_idx + 1 :]):
        line_number = header_idx + 2 + offset
        stripped = line.strip()
        first = stripped.split(",", 1)[0].strip()
        if not _DATE_RE.match(first):
            if dates or n_dropped:
                break  # trailer or next section: data block is over
            if not stripped:
                continue  # blank line between header and data
            raise ParseError(
                f"line {line_number}: expected a YYYYMMDD data row, got {stripped[:40]!r}",
                line_number=line_number,
            )
        cells = [c.strip() for c in stripped.split(",")]
        if len(cells) != ncol + 1:
            raise ParseError(
                f"line {line_number}: expected {ncol + 1} fields, got {len(cells)}",
                line_number=line_number,
            )
        date = _parse_date(cells[0], line_number)
        try:
            vals = [float(c) for c in cells[1:]]
        except ValueError as exc:
            raise ParseError(
                f"line {line_number}: non-numeric cell ({exc})",
                line_number=line_number,
            ) from None
        if any(v in SENTINELS for v in vals):
            n_dropped += 1
            continue
        dates.append(date)
        rows.append(vals)

    if not dates:
        raise EmptyDatasetError(f"{path}: header found but no usable data rows")

    return FrenchTable(
        dates=np.array(dates, dtype="datetime64[D]"),
        names=names,
        values=np.array(rows, dtype=float),
        n_dropped=n_dropped,
    )


def build_dataset(industry, factors):
    """Inner-join industry and factor tables into an excess-return Dataset."""
    common, idx_i, idx_f = np.intersect1d(
        industry.dates, factors.dates, return_indices=True
    )
    if common.size == 0:
        raise EmptyDatasetError("industry and factor files share no dates")
    rf = factors.values[idx_f, 3]
    fac = factors.values[idx_f, :3]
    raw = industry.values[idx_i]
    return Dataset(
        dates=common,
        returns=raw - rf[:, None],
        factors=fac,
        risk_free=rf,
        asset_names=list(industry.names),
        factor_names=list(factors.names[:3]),
    )
