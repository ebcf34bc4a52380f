"""Series and profile containers, the profile transform and the
autocorrelation function, plus plain-text / CSV ingestion."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError, FluctaError, ParameterError


def _frozen_array(values) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True).ravel()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Series:
    """Finite, equidistant real-valued record ``x_1..x_N``."""

    values: np.ndarray
    label: str | None = None

    def __post_init__(self):
        arr = _frozen_array(self.values)
        if arr.size == 0:
            raise FluctaError("series is empty")
        if not np.all(np.isfinite(arr)):
            raise FluctaError("series contains NaN or infinite values")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Series):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Profile:
    """Cumulative sum ``X(n)`` of the mean-removed series."""

    values: np.ndarray
    source_mean: float = field(default=0.0)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))

    def __len__(self) -> int:
        return self.values.size


def as_series(data) -> Series:
    """Wrap arrays and lists into a :class:`Series`; pass series through."""
    if isinstance(data, Series):
        return data
    return Series(np.asarray(data, dtype=float))


def compute_profile(series) -> Profile:
    """Return ``X(n) = sum_{i<=n} (x_i - <x>)``.

    Translation covariant: adding a constant to the series leaves the
    profile unchanged (up to rounding of the mean).
    """
    x = as_series(series).values
    mean = float(np.mean(x))
    return Profile(np.cumsum(x - mean), source_mean=mean)


def autocorrelation(series, lag: int) -> float:
    """Autocorrelation ``C(s)`` about the global mean.

    ``C(s) = sum_{i=1}^{N-s} x~_i x~_{i+s} / ((N - s) <x~^2>)`` with
    ``x~ = x - <x>``.  ``C(0)`` is exactly 1.
    """
    x = as_series(series).values
    n = x.size
    lag = int(lag)
    if lag < 0 or lag >= n:
        raise ParameterError(f"lag {lag} outside [0, {n - 1}]")
    xt = x - x.mean()
    var = np.mean(xt * xt)
    if var <= 0.0:
        raise DegenerateInputError("series has zero variance")
    if lag == 0:
        return 1.0
    return float(np.dot(xt[: n - lag], xt[lag:]) / ((n - lag) * var))


def series_stats(series) -> tuple[float, float]:
    """Arithmetic mean and population standard deviation."""
    x = as_series(series).values
    return float(np.mean(x)), float(np.std(x))


def read_series(path, column: str | int | None = None) -> Series:
    """Read a series from a plain-text or CSV file.

    Plain text holds one number per line; lines starting with ``#`` and
    blank lines are skipped.  Files ending in ``.csv`` (or any file when
    ``column`` is given) are read as CSV: ``column`` selects a header
    name or a 0-based index, default is the first column.  A non-numeric
    first row is treated as a header.
    """
    path = Path(path)
    text = path.read_text()
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if path.suffix.lower() != ".csv" and column is None:
        try:
            values = [float(ln) for ln in lines]
        except ValueError as exc:
            raise FluctaError(f"{path}: non-numeric line ({exc})") from None
        return Series(values, label=path.stem)

    rows = list(csv.reader(lines))
    if not rows:
        raise FluctaError(f"{path}: no data")
    header = None
    try:
        [float(v) for v in rows[0]]
    except ValueError:
        header = [h.strip() for h in rows[0]]
        rows = rows[1:]
    if column is None:
        idx = 0
    elif isinstance(column, int) or str(column).isdigit():
        idx = int(column)
    else:
        if header is None or column not in header:
            raise FluctaError(f"{path}: no column named {column!r}")
        idx = header.index(column)
    try:
        values = [float(r[idx]) for r in rows]
    except (IndexError, ValueError) as exc:
        raise FluctaError(f"{path}: bad value in column {column!r} ({exc})") from None
    label = header[idx] if header is not None else path.stem
    return Series(values, label=label)


def format_value(v: float) -> str:
    """17 significant digits: lossless for IEEE doubles."""
    return f"{v:.17g}"


def write_series(path, series) -> None:
    from .io import atomic_write

    x = as_series(series).values
    atomic_write(path, "".join(format_value(v) + "\n" for v in x))
