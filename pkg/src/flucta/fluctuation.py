"""Fluctuation functions F(s) of the random-walk family.

Every method works on the profile ``X(n)`` (R/S works on the raw series):

* FA    -- rms of profile increments over non-overlapping segments
* RS    -- rescaled range averaged over segments
* DFA-p -- rms residual after a degree-p fit in each segment
* BMA   -- residual against a trailing moving average of width s
* CMA   -- residual against a centred moving average of (odd) width s
* MDFA-p -- rms of half-segment increments of the DFA-p residual

Segments run forward from the start; a remainder shorter than ``s`` is
discarded.  The per-series functions return ``F(s)``; ensembles average
``F(s)**2`` and take the root last (:func:`fluctuation_curve`).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DegenerateInputError, FluctaError, InsufficientDataError, ParameterError
from .series import Profile, Series, as_series, compute_profile

KINDS = ("FA", "RS", "DFA", "BMA", "CMA", "MDFA")
_ORDERED = ("DFA", "MDFA")


@dataclass(frozen=True)
class Method:
    kind: str
    order: int | None = None

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        if kind not in KINDS:
            raise ParameterError(f"unknown method {self.kind!r}; expected one of {KINDS}")
        if kind in _ORDERED:
            order = 1 if self.order is None else self.order
            if int(order) != order or order < 1:
                raise ParameterError(f"{kind} needs a detrending order p >= 1, got {order}")
            object.__setattr__(self, "order", int(order))
        elif self.order is not None:
            raise ParameterError(f"{kind} takes no detrending order")

    @classmethod
    def parse(cls, text: str, order: int | None = None) -> "Method":
        """Parse names like ``"dfa2"``, ``"CMA"`` or ``"mdfa"`` (+ ``order``)."""
        m = re.fullmatch(r"\s*([A-Za-z/]+?)(\d*)\s*", text)
        if m is None:
            raise ParameterError(f"cannot parse method {text!r}")
        kind = m.group(1).upper().replace("R/S", "RS")
        if m.group(2):
            if order is not None and int(m.group(2)) != order:
                raise ParameterError(f"conflicting orders in {text!r} and order={order}")
            order = int(m.group(2))
        return cls(kind, order)

    @property
    def min_scale(self) -> int:
        if self.kind == "DFA":
            return self.order + 2
        if self.kind == "MDFA":
            return max(self.order + 2, 4)
        if self.kind == "CMA":
            return 3
        return 4

    def __str__(self) -> str:
        return f"{self.kind}{self.order}" if self.order is not None else self.kind


DFA1 = Method("DFA", 1)
DFA2 = Method("DFA", 2)
MDFA1 = Method("MDFA", 1)
CMA = Method("CMA")
BMA = Method("BMA")
FA = Method("FA")
RS = Method("RS")


def as_method(method) -> Method:
    return method if isinstance(method, Method) else Method.parse(str(method))


# --------------------------------------------------------------------------
# scale grids


def _round_valid(s: float, method: Method) -> int:
    if method.kind == "CMA":
        return int(2 * np.round((s - 1) / 2) + 1)
    if method.kind == "MDFA":
        return int(2 * np.round(s / 2))
    return int(np.round(s))


def default_scale_grid(n: int, method, per_decade: int = 20) -> np.ndarray:
    """Roughly log-spaced integer scales from the method minimum to ``N//2``.

    CMA scales are odd, MDFA scales even.
    """
    method = as_method(method)
    if n < 16:
        raise ParameterError(f"series length {n} too short for a scale grid (need >= 16)")
    s_min, s_max = method.min_scale, n // 2
    if method.kind == "CMA" and s_max % 2 == 0:
        s_max -= 1
    if method.kind == "MDFA" and s_max % 2 == 1:
        s_max -= 1
    k = max(int(np.ceil(per_decade * np.log10(s_max / s_min))), 1) + 1
    targets = np.logspace(np.log10(s_min), np.log10(s_max), k)
    scales = np.unique([_round_valid(t, method) for t in targets])
    scales = scales[(scales >= s_min) & (scales <= s_max)]
    if scales.size < 4:
        raise ParameterError(
            f"N={n} yields only {scales.size} valid scales for {method}; need at least 4"
        )
    return scales.astype(int)


def check_grid(scales, n: int, method) -> np.ndarray:
    method = as_method(method)
    scales = np.asarray(scales)
    if scales.ndim != 1 or scales.size == 0:
        raise ParameterError("scale grid must be a non-empty 1-d list")
    if np.any(scales != np.round(scales)):
        raise ParameterError("scales must be integers")
    scales = scales.astype(int)
    if np.any(np.diff(scales) <= 0):
        raise ParameterError("scales must be strictly increasing")
    for s in scales:
        _check_scale(method, int(s), n)
    return scales


def _check_scale(method: Method, s: int, n: int) -> None:
    kind = method.kind
    if kind in ("DFA", "MDFA") and s < method.order + 2:
        raise InsufficientDataError(
            f"{method}: scale {s} leaves the degree-{method.order} fit underdetermined (need s >= {method.order + 2})"
        )
    if s < method.min_scale:
        raise ParameterError(f"{method}: scale {s} below minimum {method.min_scale}")
    if s > n // 2:
        raise ParameterError(f"{method}: scale {s} exceeds N/2 = {n // 2}")
    if kind == "CMA" and s % 2 == 0:
        raise ParameterError(f"CMA needs odd scales, got {s}")
    if kind == "MDFA" and s % 2 == 1:
        raise ParameterError(f"MDFA needs even scales, got {s}")


# --------------------------------------------------------------------------
# per-scale mean squares


def _segments(x: np.ndarray, s: int) -> np.ndarray:
    n_seg = x.size // s
    if n_seg < 2:
        raise InsufficientDataError(f"scale {s} gives {n_seg} segment(s) for N={x.size}; need >= 2")
    return x[: n_seg * s].reshape(n_seg, s)


@lru_cache(maxsize=512)
def _poly_basis(s: int, p: int) -> np.ndarray:
    """Orthonormal basis (s x (p+1)) of degree-p polynomials on n = 1..s."""
    t = np.arange(1, s + 1, dtype=float)
    t = (t - (s + 1) / 2.0) / max((s - 1) / 2.0, 1.0)
    vander = np.vander(t, p + 1, increasing=True)
    q, _ = np.linalg.qr(vander)
    q.flags.writeable = False
    return q


def detrended_segments(profile: np.ndarray, s: int, p: int) -> np.ndarray:
    """Residuals ``X(n) - y_s^(p)(n)``, one row per segment."""
    seg = _segments(profile, s)
    q = _poly_basis(s, p)
    return seg - (seg @ q) @ q.T


def _fa2(X, s):
    seg_ends = _segments(X, s)[:, -1]
    starts = np.concatenate(([0.0], seg_ends[:-1]))
    d = seg_ends - starts
    return float(np.mean(d * d))


def _dfa2(X, s, p):
    r = detrended_segments(X, s, p)
    return float(np.mean(r * r))


def _mdfa2(X, s, p):
    r = detrended_segments(X, s, p)
    h = s // 2
    d = r[:, h:] - r[:, :h]
    return float(np.mean(d * d))


def _prefix_sums(X: np.ndarray) -> np.ndarray:
    """``c[k] = X[0] + ... + X[k-1]`` in extended precision.

    The prefix sums grow like N*|X| while the window sums taken from them
    are much smaller, so double precision would lose digits.
    """
    return np.concatenate(([0.0], np.cumsum(X, dtype=np.longdouble)))


def _window_means(X: np.ndarray, s: int, prefix=None) -> np.ndarray:
    """Means of every length-s window, ``out[k] = mean(X[k:k+s])``."""
    c = _prefix_sums(X) if prefix is None else prefix
    return np.asarray((c[s:] - c[:-s]) / s, dtype=float)


def _cma2(X, s, prefix=None):
    h = (s - 1) // 2
    r = X[h : X.size - h] - _window_means(X, s, prefix)
    return float(np.mean(r * r))


def _bma2(X, s, prefix=None):
    r = X[s - 1 :] - _window_means(X, s, prefix)
    return float(np.mean(r * r))


def _rs_mean(x: np.ndarray, s: int) -> float:
    seg = _segments(x, s)
    dev = seg - seg.mean(axis=1, keepdims=True)
    walk = np.cumsum(dev, axis=1)
    r = walk.max(axis=1) - walk.min(axis=1)
    sd = seg.std(axis=1)
    bad = np.flatnonzero(sd <= 0)
    if bad.size:
        raise DegenerateInputError(
            f"R/S: segment {int(bad[0])} at scale {s} has zero standard deviation", index=int(bad[0])
        )
    return float(np.mean(r / sd))


def _as_profile(data) -> np.ndarray:
    if isinstance(data, Profile):
        return data.values
    return np.asarray(data, dtype=float)


def fa(profile, s: int) -> float:
    """FA: ``sqrt(mean_nu [X(nu s) - X((nu-1) s)]**2)`` with ``X(0) = 0``."""
    X = _as_profile(profile)
    _check_scale(FA, s, X.size)
    return float(np.sqrt(_fa2(X, s)))


def rs(series, s: int) -> float:
    """Hurst rescaled range at scale ``s``.

    In each segment the values are centred and summed; ``R`` is the range
    of that walk and ``S`` the standard deviation of the segment values.
    Returns the mean of ``R/S`` over segments.
    """
    x = as_series(series).values
    _check_scale(RS, s, x.size)
    return _rs_mean(x, s)


def dfa(profile, s: int, p: int = 1) -> float:
    X = _as_profile(profile)
    m = Method("DFA", p)
    _check_scale(m, s, X.size)
    return float(np.sqrt(_dfa2(X, s, p)))


def cma(profile, s: int) -> float:
    """CMA: residual against the centred mean of ``s`` (odd) profile values,
    evaluated where the whole window fits."""
    X = _as_profile(profile)
    _check_scale(CMA, s, X.size)
    return float(np.sqrt(_cma2(X, s)))


def bma(profile, s: int) -> float:
    """BMA: residual against the mean of ``X(n-s+1..n)`` for ``n >= s``."""
    X = _as_profile(profile)
    if s < 2:
        raise ParameterError(f"BMA: scale {s} below 2")
    if s > X.size // 2:
        raise ParameterError(f"BMA: scale {s} exceeds N/2 = {X.size // 2}")
    return float(np.sqrt(_bma2(X, s)))


def mdfa(profile, s: int, p: int = 1) -> float:
    X = _as_profile(profile)
    m = Method("MDFA", p)
    _check_scale(m, s, X.size)
    return float(np.sqrt(_mdfa2(X, s, p)))


def mean_square(method, series, s: int, _prefix=None) -> float:
    """``F(s)**2`` of one series for any method (no scale validation).

    ``series`` may be a :class:`Profile`, used as is for the profile-based
    methods.
    """
    method = as_method(method)
    kind = method.kind
    if kind == "RS":
        r = _rs_mean(as_series(series).values, s)
        return r * r
    X = series.values if isinstance(series, Profile) else compute_profile(series).values
    if kind == "FA":
        return _fa2(X, s)
    if kind == "DFA":
        return _dfa2(X, s, method.order)
    if kind == "MDFA":
        return _mdfa2(X, s, method.order)
    if kind == "CMA":
        return _cma2(X, s, _prefix)
    return _bma2(X, s, _prefix)


def mean_squares(method, series, scales) -> np.ndarray:
    """``F(s)**2`` of one series on a whole grid, computing the profile once."""
    method = as_method(method)
    if method.kind == "RS":
        data = as_series(series)
        return np.array([mean_square(method, data, int(s)) for s in scales])
    data = series if isinstance(series, Profile) else compute_profile(series)
    prefix = _prefix_sums(data.values) if method.kind in ("CMA", "BMA") else None
    return np.array([mean_square(method, data, int(s), prefix) for s in scales])


# --------------------------------------------------------------------------
# curves


@dataclass(frozen=True, eq=False)
class FluctuationCurve:
    method: Method
    scales: np.ndarray
    F: np.ndarray
    ensemble_size: int = 1
    n: int | None = None

    def __post_init__(self):
        scales = np.asarray(self.scales)
        F = np.asarray(self.F, dtype=float)
        if scales.shape != F.shape or scales.ndim != 1:
            raise ParameterError("scales and F must be 1-d arrays of equal length")
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "F", F)

    def __len__(self):
        return self.scales.size

    def rows(self):
        return list(zip(self.scales.tolist(), self.F.tolist()))


def fluctuation_curve(series_set, method, grid=None, workers: int | None = None) -> FluctuationCurve:
    """Ensemble fluctuation function.

    ``F(s) = sqrt(mean_over_series F_i(s)**2)``: the squares are averaged
    first and the root is taken last.  Members are reduced in input order,
    so the result does not depend on ``workers``.
    """
    method = as_method(method)
    if isinstance(series_set, (Series, np.ndarray)) and np.ndim(getattr(series_set, "values", series_set)) == 1:
        series_set = [series_set]
    members = [as_series(s) for s in series_set]
    if not members:
        raise ParameterError("empty ensemble")
    n = len(members[0])
    if any(len(m) != n for m in members):
        raise ParameterError("all series in an ensemble must share the same length")
    scales = default_scale_grid(n, method) if grid is None else check_grid(grid, n, method)

    if workers is not None and workers > 1 and len(members) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(workers) as pool:
            f2 = list(pool.map(lambda m: mean_squares(method, m, scales), members))
    else:
        f2 = [mean_squares(method, m, scales) for m in members]
    total = np.zeros(scales.size)
    for row in f2:
        total += row
    return FluctuationCurve(method, scales, np.sqrt(total / len(members)), len(members), n)


def curve_from_mean_squares(method, scales, f2_rows) -> FluctuationCurve:
    """Build an ensemble curve from precomputed per-series ``F**2`` rows."""
    f2_rows = np.asarray(f2_rows, dtype=float)
    total = np.zeros(f2_rows.shape[1])
    for row in f2_rows:
        total += row
    return FluctuationCurve(as_method(method), np.asarray(scales), np.sqrt(total / len(f2_rows)), len(f2_rows))


__all__ = [
    "Method", "FluctuationCurve", "FluctaError", "default_scale_grid", "check_grid",
    "fa", "rs", "dfa", "cma", "bma", "mdfa", "mean_square", "mean_squares",
    "fluctuation_curve", "curve_from_mean_squares", "detrended_segments",
    "DFA1", "DFA2", "MDFA1", "CMA", "BMA", "FA", "RS",
]
