"""Dataset ingestion: table loading, missing-value removal, sensor typing.

Tables are rectangular numeric matrices (rows = time steps, columns =
sensors) with an optional timestamp column that is validated for
monotonicity but never used in modeling.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from datetime import datetime
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import AllRowsDropped, ConfigError, NonMonotoneTimestamps, ParseError

DEFAULT_MAX_DISCRETE_CARDINALITY = 12


class SensorKind(str, Enum):
    CONTINUOUS = "Continuous"
    DISCRETE = "Discrete"


@dataclass
class RawDataset:
    """Timestamp-ordered multivariate sensor table.

    `values` is a float64 matrix [rows, n]; `timestamps` keeps the raw
    text of the declared time column (monotonicity is checked at load).
    `provenance` is an append-only log of cleaning steps.
    """

    name: str
    values: np.ndarray
    column_names: list[str]
    timestamps: list[str] | None = None
    timestamp_name: str | None = None
    provenance: list[str] = field(default_factory=list)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_sensors(self) -> int:
        return self.values.shape[1]


@dataclass
class SensorMeta:
    """Per-sensor typing and (once fitted) training statistics.

    `observed_states`/`state_counts` are present only for discrete
    sensors; states are sorted strictly ascending with aligned counts.
    """

    index: int
    name: str
    kind: SensorKind
    observed_states: tuple[float, ...] | None = None
    state_counts: tuple[int, ...] | None = None
    train_mean: float | None = None
    train_std: float | None = None

    @property
    def degenerate(self) -> bool:
        """True for a discrete sensor with a single observed state."""
        return self.kind is SensorKind.DISCRETE and len(self.observed_states) == 1


def _timestamp_sort_key(text: str, row: int):
    """Parse a timestamp cell into something orderable (number or datetime)."""
    try:
        return float(text)
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(text.strip())
    except ValueError:
        raise ParseError(f"unparseable timestamp {text!r}", row=row) from None


def _parse_cell(text: str, row: int, column: int) -> float:
    text = text.strip()
    if text == "":
        return math.nan
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"non-numeric value {text!r}", row=row, column=column) from None


def load_table(
    path,
    *,
    delimiter: str = ",",
    timestamp_column: str | None = None,
    fmt: str = "auto",
    name: str | None = None,
) -> RawDataset:
    """Load a CSV (or Parquet) file into a RawDataset.

    The file must be a rectangular numeric table with a header row; the
    only non-numeric column allowed is the declared timestamp column.
    Raises FileNotFoundError, ParseError (with 1-based row/column of the
    first offense, header = row 1), or NonMonotoneTimestamps.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    if fmt == "auto":
        fmt = "parquet" if path.suffix.lower() in (".parquet", ".pq") else "csv"
    if fmt == "parquet":
        header, raw_rows = _read_parquet(path)
    elif fmt == "csv":
        header, raw_rows = _read_csv(path, delimiter)
    else:
        raise ConfigError(f"unknown table format {fmt!r}")

    if timestamp_column is not None and timestamp_column not in header:
        raise ParseError(f"declared timestamp column {timestamp_column!r} not in header {header}")

    ts_idx = header.index(timestamp_column) if timestamp_column is not None else None
    column_names = [h for i, h in enumerate(header) if i != ts_idx]
    if not column_names:
        raise ParseError("table has no sensor columns")

    values = np.empty((len(raw_rows), len(column_names)), dtype=np.float64)
    timestamps: list[str] | None = [] if ts_idx is not None else None
    for r, cells in enumerate(raw_rows):
        file_row = r + 2  # header occupies row 1
        if len(cells) != len(header):
            raise ParseError(
                f"expected {len(header)} fields, got {len(cells)}", row=file_row
            )
        j = 0
        for c, cell in enumerate(cells):
            if c == ts_idx:
                timestamps.append(str(cell))
            else:
                values[r, j] = _parse_cell(str(cell), file_row, c + 1)
                j += 1

    if timestamps is not None:
        keys = [_timestamp_sort_key(t, i + 2) for i, t in enumerate(timestamps)]
        for i in range(1, len(keys)):
            if not keys[i] > keys[i - 1]:
                raise NonMonotoneTimestamps(
                    f"timestamps not strictly increasing at row {i + 2}: "
                    f"{timestamps[i - 1]!r} -> {timestamps[i]!r}"
                )

    ds_name = name if name is not None else path.stem
    return RawDataset(
        name=ds_name,
        values=values,
        column_names=column_names,
        timestamps=timestamps,
        timestamp_name=timestamp_column,
        provenance=[f"loaded {path.name}: {values.shape[0]} rows, {values.shape[1]} sensors"],
    )


def _read_csv(path: Path, delimiter: str) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        rows = [row for row in reader if row]
    if not rows:
        raise ParseError("empty file")
    header = [h.strip() for h in rows[0]]
    if len(rows) == 1:
        raise ParseError("no data rows")
    return header, rows[1:]


def _read_parquet(path: Path) -> tuple[list[str], list[list[str]]]:
    try:
        import pyarrow.parquet as pq
    except ImportError:
        raise ConfigError("Parquet support requires the optional pyarrow dependency") from None
    table = pq.read_table(path)
    header = list(table.column_names)
    columns = [table.column(c).to_pylist() for c in header]
    rows = [["" if v is None else str(v) for v in row] for row in zip(*columns)]
    if not rows:
        raise ParseError("no data rows")
    return header, rows


def save_table(ds: RawDataset, path) -> None:
    """Write the dataset back as canonical CSV (exact float round-trip)."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = list(ds.column_names)
        if ds.timestamps is not None:
            header = [ds.timestamp_name or "timestamp"] + header
        writer.writerow(header)
        for r in range(ds.rows):
            cells = [repr(float(v)) for v in ds.values[r]]
            if ds.timestamps is not None:
                cells = [ds.timestamps[r]] + cells
            writer.writerow(cells)


def drop_missing(ds: RawDataset) -> RawDataset:
    """Remove every row containing a non-finite or absent cell.

    Row order is preserved and the dropped count is appended to the
    provenance log. Raises AllRowsDropped if nothing remains.
    """
    keep = np.isfinite(ds.values).all(axis=1)
    dropped = int((~keep).sum())
    if dropped == ds.rows:
        raise AllRowsDropped(f"all {ds.rows} rows contain missing values")
    if dropped == 0:
        return replace(ds, provenance=ds.provenance + ["drop_missing: removed 0 rows"])
    timestamps = None
    if ds.timestamps is not None:
        timestamps = [t for t, k in zip(ds.timestamps, keep) if k]
    return replace(
        ds,
        values=ds.values[keep],
        timestamps=timestamps,
        provenance=ds.provenance + [f"drop_missing: removed {dropped} of {ds.rows} rows"],
    )


def classify_sensors(
    ds: RawDataset, max_discrete_cardinality: int = DEFAULT_MAX_DISCRETE_CARDINALITY
) -> list[SensorMeta]:
    """Classify each sensor as discrete or continuous by distinct-value count.

    A sensor is discrete iff it takes at most `max_discrete_cardinality`
    distinct finite values over all rows; discrete sensors record their
    sorted states and occurrence counts (needed to pick oscillation
    states later). Deterministic and independent of row order.
    """
    if ds.rows == 0:
        raise AllRowsDropped("cannot classify sensors of an empty dataset")
    metas = []
    for j, col_name in enumerate(ds.column_names):
        column = ds.values[:, j]
        finite = column[np.isfinite(column)]
        states, counts = np.unique(finite, return_counts=True)
        if 0 < states.size <= max_discrete_cardinality:
            metas.append(
                SensorMeta(
                    index=j,
                    name=col_name,
                    kind=SensorKind.DISCRETE,
                    observed_states=tuple(float(s) for s in states),
                    state_counts=tuple(int(c) for c in counts),
                )
            )
        else:
            metas.append(SensorMeta(index=j, name=col_name, kind=SensorKind.CONTINUOUS))
    for meta in metas:
        if meta.degenerate:
            ds.provenance.append(f"degenerate sensor: {meta.name!r} has a single observed state")
    return metas
