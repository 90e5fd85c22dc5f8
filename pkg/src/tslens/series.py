"""Time-series containers, CSV ingestion, splitting, scaling, and windowing.

Values are stored channel-major: a series with d channels and n time steps
is a (d, n) float array.  Channels are 0-indexed, time steps are 1-indexed
in user-facing APIs (matching the perturbation and property conventions).
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np


class CsvFormatError(ValueError):
    """Malformed CSV input; the message names the offending file position."""


class SplitError(ValueError):
    """A requested train/val/test split cannot be realized."""


class WindowError(ValueError):
    """The series is too short for the requested window layout."""


_TIME_COLUMN_NAMES = {"timestamp", "date"}


@dataclass(frozen=True)
class Series:
    """A d-channel series of n steps; immutable after construction."""

    values: np.ndarray
    channel_names: tuple[str, ...]
    frequency_hint: str | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "channel_names", tuple(self.channel_names))
        if values.ndim != 2:
            raise ValueError(f"series values must be 2-D (channels, steps), got ndim={values.ndim}")
        d, n = values.shape
        if d < 1 or n < 1:
            raise ValueError(f"series needs at least one channel and one step, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("series values must be finite (no NaN/Inf)")
        if len(self.channel_names) != d:
            raise ValueError(f"expected {d} channel names, got {len(self.channel_names)}")
        if len(set(self.channel_names)) != d:
            raise ValueError("channel names must be distinct")

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Window:
    """An input subsequence x (d, b) plus optional ground truth y (d, h).

    When y is present, x and y are consecutive slices of the parent series;
    origin_index is the 0-based offset of x's first step in that series.
    """

    x: np.ndarray
    y: np.ndarray | None = None
    origin_index: int = 0

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64)
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        if x.ndim != 2 or x.shape[1] < 2:
            raise ValueError(f"window input must be (channels, b) with b >= 2, got shape {x.shape}")
        if not np.all(np.isfinite(x)):
            raise ValueError("window input must be finite")
        if self.y is not None:
            y = np.asarray(self.y, dtype=np.float64)
            y.setflags(write=False)
            object.__setattr__(self, "y", y)
            if y.ndim != 2 or y.shape[0] != x.shape[0]:
                raise ValueError(f"ground truth shape {y.shape} incompatible with input shape {x.shape}")
            if not np.all(np.isfinite(y)):
                raise ValueError("window ground truth must be finite")

    @property
    def d(self) -> int:
        return self.x.shape[0]

    @property
    def b(self) -> int:
        return self.x.shape[1]


@dataclass(frozen=True)
class SplitSpec:
    """Contiguous train/val/test ratios, in temporal order."""

    ratios: tuple[float, float, float] = (0.7, 0.1, 0.2)

    def __post_init__(self):
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))
        if len(self.ratios) != 3 or any(r < 0 for r in self.ratios):
            raise ValueError(f"need three non-negative ratios, got {self.ratios}")
        if abs(sum(self.ratios) - 1.0) > 1e-9:
            raise ValueError(f"split ratios must sum to 1, got {sum(self.ratios)}")


@dataclass(frozen=True)
class ScalingStats:
    """Per-channel mean and population std; zero-std channels are flagged."""

    mean: np.ndarray
    std: np.ndarray
    constant_channels: tuple[int, ...] = field(default=())

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=np.float64)
        std = np.asarray(self.std, dtype=np.float64)
        mean.setflags(write=False)
        std.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)
        object.__setattr__(self, "constant_channels", tuple(self.constant_channels))
        if mean.shape != std.shape or mean.ndim != 1:
            raise ValueError("mean and std must be 1-D vectors of equal length")
        if np.any(std < 0):
            raise ValueError("std entries must be non-negative")

    @classmethod
    def from_series(cls, series: Series) -> "ScalingStats":
        mean = series.values.mean(axis=1)
        std = series.values.std(axis=1)  # population (1/n) variance
        constant = tuple(int(c) for c in np.flatnonzero(std == 0.0))
        return cls(mean=mean, std=std, constant_channels=constant)

    def effective_std(self) -> np.ndarray:
        return np.where(self.std == 0.0, 1.0, self.std)


def load_csv(path, columns: list[str] | None = None, frequency_hint: str | None = None) -> Series:
    """Read a comma-separated file into a Series, one channel per column.

    The file must have one header row.  A leading column named "timestamp"
    or "date" (case-insensitive) is skipped unless explicitly selected.
    Every remaining cell must parse as a finite number; violations are
    reported with their file line and column name.
    """
    try:
        handle = open(path, "r", encoding="utf-8", newline="")
    except FileNotFoundError:
        raise CsvFormatError(f"no such file: {path}") from None
    with handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: file is empty") from None
        header = [name.strip() for name in header]
        if columns is None:
            selected = list(header)
            if selected and selected[0].lower() in _TIME_COLUMN_NAMES:
                selected = selected[1:]
            if not selected:
                raise CsvFormatError(f"{path}: no numeric columns after skipping the time column")
        else:
            missing = [name for name in columns if name not in header]
            if missing:
                raise CsvFormatError(f"{path}: columns not found in header: {missing}")
            selected = list(columns)
        if len(set(selected)) != len(selected):
            raise CsvFormatError(f"{path}: duplicate column names selected: {selected}")
        indices = [header.index(name) for name in selected]

        rows: list[list[float]] = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise CsvFormatError(
                    f"{path}: line {line_no} has {len(row)} cells, expected {len(header)}"
                )
            parsed = []
            for idx, name in zip(indices, selected):
                cell = row[idx].strip()
                try:
                    value = float(cell)
                except ValueError:
                    raise CsvFormatError(
                        f"{path}: line {line_no}, column {name!r}: non-numeric value {cell!r}"
                    ) from None
                if not math.isfinite(value):
                    raise CsvFormatError(
                        f"{path}: line {line_no}, column {name!r}: non-finite value {cell!r}"
                    )
                parsed.append(value)
            rows.append(parsed)

    if not rows:
        raise CsvFormatError(f"{path}: no data rows")
    values = np.array(rows, dtype=np.float64).T  # rows are time steps, columns channels
    return Series(values=values, channel_names=tuple(selected), frequency_hint=frequency_hint)


def save_csv(series: Series, path) -> None:
    """Write a Series back to CSV; floats use shortest round-trip form."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(series.channel_names)
        for step in range(series.n):
            writer.writerow([repr(float(v)) for v in series.values[:, step]])


def _segment_lengths(n: int, ratios: tuple[float, float, float]) -> list[int]:
    lengths = []
    for r in ratios:
        exact = r * n
        snapped = round(exact)
        lengths.append(snapped if abs(exact - snapped) < 1e-9 else math.floor(exact))
    lengths[0] += n - sum(lengths)
    return lengths


def split(series: Series, spec: SplitSpec = SplitSpec(), min_segment: int = 0):
    """Cut the series into contiguous, ordered train/val/test segments.

    Segment lengths are floor(ratio * n), with the integer remainder added
    to the training segment.  When min_segment is positive, every segment
    with a non-zero ratio must receive at least that many steps (callers
    pass b + h so each split can produce at least one window).
    """
    lengths = _segment_lengths(series.n, spec.ratios)
    names = ("train", "val", "test")
    needed = max(min_segment, 1)
    short = [f"{name} split has {length} steps" for name, ratio, length in
             zip(names, spec.ratios, lengths) if ratio > 0 and length < needed]
    if short:
        raise SplitError(
            f"{'; '.join(short)}; each non-empty split needs at least {needed} "
            f"(n={series.n}, ratios={spec.ratios})"
        )
    parts = []
    start = 0
    for length in lengths:
        stop = start + length
        if length == 0:
            parts.append(None)
        else:
            parts.append(
                Series(
                    values=series.values[:, start:stop],
                    channel_names=series.channel_names,
                    frequency_hint=series.frequency_hint,
                )
            )
        start = stop
    return tuple(parts)


def standardize(series: Series, stats: ScalingStats) -> Series:
    """Shift/scale each channel to (value - mean) / std using given stats.

    Channels flagged constant in the stats divide by 1 instead of 0.  Stats
    should come from the training split only; that contract is the caller's.
    """
    std = stats.effective_std()
    values = (series.values - stats.mean[:, None]) / std[:, None]
    return Series(values=values, channel_names=series.channel_names, frequency_hint=series.frequency_hint)


def unstandardize(series: Series, stats: ScalingStats) -> Series:
    """Invert standardize() with the same stats."""
    std = stats.effective_std()
    values = series.values * std[:, None] + stats.mean[:, None]
    return Series(values=values, channel_names=series.channel_names, frequency_hint=series.frequency_hint)


def make_windows(series: Series, b: int, h: int, stride: int = 1) -> list[Window]:
    """Slide a (b input, h ground-truth) window over the series.

    Windows start at 0, stride, 2*stride, ... while origin + b + h <= n,
    so the count is floor((n - b - h) / stride) + 1.
    """
    if b < 2:
        raise ValueError(f"lookback must be >= 2, got {b}")
    if h < 1:
        raise ValueError(f"horizon must be >= 1, got {h}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if series.n < b + h:
        raise WindowError(f"series has {series.n} steps, need at least b + h = {b + h}")
    windows = []
    for origin in range(0, series.n - b - h + 1, stride):
        windows.append(
            Window(
                x=series.values[:, origin : origin + b],
                y=series.values[:, origin + b : origin + b + h],
                origin_index=origin,
            )
        )
    return windows
