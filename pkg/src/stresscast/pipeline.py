"""Temporal splitting, standardization, and deterministic window sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, DimensionMismatch, SegmentTooSmall
from .ingest import SensorMeta
from .mathutil import round_half_away
from .rng import rng_for

STD_GUARD = 1e-8

DEFAULT_T = 90
DEFAULT_HORIZON = 30


class SegmentRole(str, Enum):
    TRAIN = "Train"
    VAL = "Val"
    TEST = "Test"


@dataclass(frozen=True)
class SplitSpec:
    """Fractional three-way temporal split with a purge gap between segments."""

    train_frac: float = 0.70
    val_frac: float = 0.15
    test_frac: float = 0.15
    purge_frac: float = 0.01

    def __post_init__(self):
        for label, frac in (
            ("train_frac", self.train_frac),
            ("val_frac", self.val_frac),
            ("test_frac", self.test_frac),
        ):
            if frac <= 0:
                raise ConfigError(f"{label} must be positive, got {frac}")
        if abs(self.train_frac + self.val_frac + self.test_frac - 1.0) > 1e-9:
            raise ConfigError("train/val/test fractions must sum to 1")
        if not 0.0 <= self.purge_frac <= 0.05:
            raise ConfigError(f"purge_frac must be in [0, 0.05], got {self.purge_frac}")

    def purge_rows(self, rows: int) -> int:
        """Realized purge gap; at least one row unless purging is disabled."""
        if self.purge_frac == 0.0:
            return 0
        return max(1, round_half_away(self.purge_frac * rows))


@dataclass(frozen=True)
class Segment:
    """Half-open row interval [start, stop) of one split role."""

    role: SegmentRole
    start: int
    stop: int

    @property
    def length(self) -> int:
        return self.stop - self.start


def split_time(rows: int, spec: SplitSpec, min_segment_rows: int = 1) -> tuple[Segment, Segment, Segment]:
    """Split `rows` time steps into Train/Val/Test with purge gaps.

    Purge rows are consumed from the gap after Train and after Val; the
    segments themselves keep floor(frac * rows) rows (Test runs to the
    end). Raises SegmentTooSmall naming the first role that cannot hold
    `min_segment_rows` rows.
    """
    purge = spec.purge_rows(rows)
    train_len = math.floor(spec.train_frac * rows)
    val_len = math.floor(spec.val_frac * rows)

    train = Segment(SegmentRole.TRAIN, 0, train_len)
    val = Segment(SegmentRole.VAL, train_len + purge, train_len + purge + val_len)
    test = Segment(SegmentRole.TEST, val.stop + purge, rows)

    min_rows = max(1, min_segment_rows)
    for seg in (train, val, test):
        if seg.stop > rows or seg.length < min_rows:
            raise SegmentTooSmall(
                seg.role.value,
                f"segment '{seg.role.value}' has {max(0, min(seg.stop, rows) - seg.start)} rows, "
                f"needs at least {min_rows}",
            )
    return train, val, test


@dataclass(frozen=True)
class Standardizer:
    """Per-sensor affine rescaling fitted on the training segment only."""

    means: np.ndarray
    stds: np.ndarray
    guarded_columns: tuple[int, ...] = ()

    @property
    def n_sensors(self) -> int:
        return self.means.shape[0]


def fit_standardizer(table: np.ndarray, train: Segment) -> Standardizer:
    """Population mean/std per column over the training rows.

    Near-zero standard deviations (< 1e-8) are replaced by 1.0 and the
    affected columns recorded as guarded.
    """
    block = table[train.start : train.stop]
    if block.shape[0] == 0:
        raise SegmentTooSmall(train.role.value, "cannot fit standardizer on empty training segment")
    means = block.mean(axis=0)
    stds = block.std(axis=0)  # population (divide by N)
    guarded = tuple(int(j) for j in np.nonzero(stds < STD_GUARD)[0])
    if guarded:
        stds = stds.copy()
        stds[list(guarded)] = 1.0
    return Standardizer(means=means, stds=stds, guarded_columns=guarded)


def apply_standardizer(std: Standardizer, table: np.ndarray) -> np.ndarray:
    if table.shape[1] != std.n_sensors:
        raise DimensionMismatch(
            f"standardizer fitted on {std.n_sensors} columns, table has {table.shape[1]}"
        )
    return (table - std.means) / std.stds


def annotate_train_stats(metas: list[SensorMeta], std: Standardizer) -> None:
    """Copy fitted training statistics onto the sensor metadata."""
    for meta in metas:
        meta.train_mean = float(std.means[meta.index])
        meta.train_std = float(std.stds[meta.index])


@dataclass(frozen=True)
class WindowSample:
    """One forecasting sample: inputs X [t, n] and targets Y [t', n].

    X covers rows [origin, origin + t) of the standardized table and Y
    the t' rows immediately after. Arrays are read-only views.
    """

    X: np.ndarray
    Y: np.ndarray
    origin: int

    @property
    def t(self) -> int:
        return self.X.shape[0]

    @property
    def horizon(self) -> int:
        return self.Y.shape[0]

    @property
    def n_sensors(self) -> int:
        return self.X.shape[1]

    @property
    def context_tail(self) -> np.ndarray:
        """The horizon-many most recent input rows (missing-data shifts pull from here)."""
        return self.X[self.t - self.horizon :]


def _readonly_view(arr: np.ndarray) -> np.ndarray:
    view = arr.view()
    view.flags.writeable = False
    return view


def sample_windows(
    table: np.ndarray,
    seg: Segment,
    t: int,
    horizon: int,
    n_windows: int,
    seed: int,
) -> list[WindowSample]:
    """Draw `n_windows` window start indices from a segment, deterministically.

    Starts are uniform without replacement when the segment admits enough
    distinct positions, with replacement otherwise; the stream is keyed
    by (seed, segment role). Windows are returned sorted by start index.
    """
    span = t + horizon
    n_valid = seg.length - span + 1
    if n_valid < 1:
        raise SegmentTooSmall(
            seg.role.value,
            f"segment '{seg.role.value}' has {seg.length} rows, needs at least {span}",
        )
    rng = rng_for(seed, "sample_windows", seg.role.value)
    if n_windows <= n_valid:
        offsets = rng.choice(n_valid, size=n_windows, replace=False)
    else:
        offsets = rng.integers(0, n_valid, size=n_windows)
    starts = np.sort(offsets.astype(np.int64)) + seg.start

    samples = []
    for i in starts:
        i = int(i)
        samples.append(
            WindowSample(
                X=_readonly_view(table[i : i + t]),
                Y=_readonly_view(table[i + t : i + span]),
                origin=i,
            )
        )
    return samples
