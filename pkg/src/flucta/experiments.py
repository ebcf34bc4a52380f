"""Ensemble studies: exponent statistics versus series length, scatter
statistics between two methods, crossover calibration and trend-induced
crossovers.

Every study draws its members from seeds ``study_seed ^ index``, analyses
each member with all requested methods, and reduces results in member
order, so outputs are reproducible and independent of ``workers``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import FluctaError, InsufficientDataError, ParameterError
from .fluctuation import (
    CMA, DFA1, MDFA1, FluctuationCurve, Method, as_method, curve_from_mean_squares,
    default_scale_grid, mean_squares,
)
from .scaling import clamp_range, detect_crossover, fit_alpha, local_slopes
from .surrogate import (
    CrossoverSpec, GeneratorSpec, TrendSpec, add_trend, generate_crossover, generate_power_law,
)

HIST_WIDTH = 0.05
HIST_RANGE = (0.0, 1.5)
MAX_FAIL_FRACTION = 0.10


def member_seed(study_seed: int, index: int) -> int:
    """Seed of ensemble member ``index``: ``study_seed XOR index``."""
    return int(study_seed) ^ int(index)


def default_workers() -> int:
    env = os.environ.get("FLUCTA_THREADS")
    if env:
        return max(int(env), 1)
    return os.cpu_count() or 1


# --------------------------------------------------------------------------
# ensemble machinery


def _make_series(kind, params, seed):
    if kind == "power":
        n, alpha = params
        return generate_power_law(GeneratorSpec(n, alpha, seed=seed))
    if kind == "crossover":
        n, a1, a2, sx = params
        return generate_crossover(CrossoverSpec(n, a1, a2, sx, seed=seed))
    if kind == "trend":
        n, alpha, amp, q = params
        return add_trend(generate_power_law(GeneratorSpec(n, alpha, seed=seed)), TrendSpec(amp, q))
    raise ValueError(kind)


def _member_task(task):
    kind, params, seed, methods, grids = task
    x = _make_series(kind, params, seed)
    return [mean_squares(m, x, g) for m, g in zip(methods, grids)]


def ensemble_mean_squares(kind, params, n_series, methods, grids, seed=0, workers=1):
    """Per-member ``F(s)**2`` for every method.

    Returns one array of shape ``(n_series, len(grid))`` per method, rows in
    member order.
    """
    methods = [as_method(m) for m in methods]
    tasks = [(kind, params, member_seed(seed, i), methods, grids) for i in range(n_series)]
    if workers and workers > 1 and n_series > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_member_task, tasks, chunksize=max(1, n_series // (4 * workers))))
    else:
        results = [_member_task(t) for t in tasks]
    return [np.array([r[k] for r in results]) for k in range(len(methods))]


def ensemble_curves(kind, params, n_series, methods, seed=0, workers=1, grids=None):
    """Ensemble-averaged curves (squares averaged, root last) per method."""
    methods = [as_method(m) for m in methods]
    n = params[0]
    if grids is None:
        grids = [default_scale_grid(n, m) for m in methods]
    rows = ensemble_mean_squares(kind, params, n_series, methods, grids, seed, workers)
    out = {}
    for m, g, r in zip(methods, grids, rows):
        c = curve_from_mean_squares(m, g, r)
        out[m] = FluctuationCurve(m, c.scales, c.F, n_series, n)
    return out


# --------------------------------------------------------------------------
# alpha versus N


@dataclass
class EnsembleStats:
    n: int
    method: Method
    mean_alpha: float
    sd_alpha: float
    histogram: list
    n_series: int
    n_failed: int = 0
    fit_range: tuple = (math.nan, math.nan)
    alphas: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)


def alpha_histogram(alphas, width=HIST_WIDTH, lo=HIST_RANGE[0], hi=HIST_RANGE[1]):
    """Normalised histogram on fixed bins of ``width`` over ``[lo, hi]``.

    Values outside the range are counted in the edge bins so the
    frequencies always sum to one.
    """
    alphas = np.asarray(alphas, dtype=float)
    n_bins = int(round((hi - lo) / width))
    edges = lo + width * np.arange(n_bins + 1)
    counts, _ = np.histogram(np.clip(alphas, lo, hi), bins=edges)
    total = counts.sum()
    freq = counts / total if total else counts.astype(float)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return list(zip(centers.tolist(), freq.tolist()))


def fit_range_for(n: int, grid, method, s_lo=10.0) -> tuple[float, float]:
    """Fixed-lower-limit range ``[10, N/2]`` snapped onto ``grid``."""
    return clamp_range(grid, s_lo, n / 2.0, as_method(method).min_scale)


def alpha_vs_length_study(target_alpha, lengths, n_series, methods=(DFA1, CMA, MDFA1), seed=0, workers=1):
    """Per-series exponents for each (N, method) cell.

    Each series is fitted over ``[10, N/2]`` on its own curve.  Fit failures
    are counted; more than 10% failures in a cell raise.
    """
    methods = [as_method(m) for m in methods]
    if n_series < 10:
        raise ParameterError(f"n_series={n_series} too small (need >= 10)")
    out = []
    for n in lengths:
        if n < 40:
            raise ParameterError(f"N={n} too short for the study (need >= 40)")
        grids = [default_scale_grid(n, m) for m in methods]
        rows = ensemble_mean_squares("power", (n, target_alpha), n_series, methods, grids, seed, workers)
        for m, g, f2 in zip(methods, grids, rows):
            lo, hi = fit_range_for(n, g, m)
            alphas, failed = [], 0
            for row in f2:
                try:
                    alphas.append(fit_alpha((g, np.sqrt(row)), lo, hi).alpha)
                except FluctaError:
                    failed += 1
            if failed > MAX_FAIL_FRACTION * n_series:
                raise InsufficientDataError(f"{m} at N={n}: {failed}/{n_series} fits failed")
            a = np.array(alphas)
            out.append(EnsembleStats(
                n=n, method=m, mean_alpha=float(a.mean()), sd_alpha=float(a.std()),
                histogram=alpha_histogram(a), n_series=n_series, n_failed=failed,
                fit_range=(lo, hi), alphas=a,
            ))
    return out


# --------------------------------------------------------------------------
# scatter statistics


@dataclass
class ScatterStats:
    sd1: float
    sd2: float
    pairs: list


def scatter_sd(alpha_ref, alpha_other) -> ScatterStats:
    """Spread perpendicular (SD1) and parallel (SD2) to the identity line.

    ``SD1 = sqrt(mean(0.5 * (d - <d>)**2))`` with ``d = a - b`` and SD2 the
    same with ``a + b``; the mean runs over the pairs.
    """
    a = np.asarray(alpha_ref, dtype=float)
    b = np.asarray(alpha_other, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ParameterError("scatter_sd needs two 1-d lists of equal length")
    if a.size < 2:
        raise ParameterError("scatter_sd needs at least two pairs")
    d = a - b
    p = a + b
    sd1 = math.sqrt(np.mean(0.5 * (d - d.mean()) ** 2))
    sd2 = math.sqrt(np.mean(0.5 * (p - p.mean()) ** 2))
    return ScatterStats(sd1, sd2, list(zip(a.tolist(), b.tolist())))


@dataclass
class ScatterRow:
    n: int
    reference: Method
    other: Method
    stats: ScatterStats


def scatter_study(stats: list[EnsembleStats], reference=DFA1) -> list[ScatterRow]:
    """SD1/SD2 of ``reference`` against every other method at each N.

    Works on the output of :func:`alpha_vs_length_study`; pairs are only
    formed when no fit failed, so member i of both methods is the same
    series.
    """
    reference = as_method(reference)
    by_n: dict[int, dict[Method, EnsembleStats]] = {}
    for st in stats:
        by_n.setdefault(st.n, {})[st.method] = st
    rows = []
    for n in sorted(by_n):
        cell = by_n[n]
        if reference not in cell:
            continue
        ref = cell[reference]
        for m, st in cell.items():
            if m == reference:
                continue
            if ref.n_failed or st.n_failed:
                raise FluctaError(f"N={n}: failed fits break the member pairing for {reference} vs {m}")
            rows.append(ScatterRow(n, reference, m, scatter_sd(ref.alphas, st.alphas)))
    return rows


# --------------------------------------------------------------------------
# crossovers


def _ln_fit(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


@dataclass
class CrossoverCell:
    s_cross: float
    method: Method
    s_observed: float
    alpha_below: float
    alpha_above: float
    detected: bool
    curve: FluctuationCurve = field(repr=False, default=None)


@dataclass
class CalibrationFit:
    method: Method
    slope: float
    intercept: float
    n_points: int


@dataclass
class CrossoverCalibration:
    cells: list
    fits: dict


def crossover_window(n: int, method, search_lo: float | None = None, search_hi: float | None = None):
    """Breakpoint search window; defaults to ``[method minimum, N/4]``."""
    lo = as_method(method).min_scale if search_lo is None else search_lo
    return lo, (n / 4.0 if search_hi is None else search_hi)


def crossover_calibration_study(alpha1, alpha2, s_cross_list, n, n_series,
                                methods=(DFA1, CMA, MDFA1), seed=0, workers=1,
                                search_lo=None, search_hi=None, min_improvement=0.05,
                                min_slope_change=0.05):
    """Observed versus imposed crossover positions.

    For each imposed ``s_x`` an ensemble curve is built per method and its
    breakpoint detected; ``ln s_x`` is then regressed on ``ln s'_x`` per
    method.  Undetected cells are flagged and left out of the regression.
    """
    methods = [as_method(m) for m in methods]
    for sx in s_cross_list:
        if not 10 < sx < n / 10:
            raise ParameterError(f"s_cross={sx} outside (10, N/10) for N={n}")
    cells = []
    for sx in s_cross_list:
        curves = ensemble_curves("crossover", (n, alpha1, alpha2, sx), n_series, methods, seed, workers)
        for m in methods:
            lo, hi = crossover_window(n, m, search_lo, search_hi)
            est = detect_crossover(curves[m], lo, hi, method=m, min_improvement=min_improvement,
                                  min_slope_change=min_slope_change)
            cells.append(CrossoverCell(float(sx), m, est.s_observed, est.alpha_below,
                                       est.alpha_above, est.detected, curves[m]))
    fits = {}
    for m in methods:
        ok = [c for c in cells if c.method == m and c.detected]
        if len(ok) >= 2:
            slope, icpt = _ln_fit(np.log([c.s_observed for c in ok]), np.log([c.s_cross for c in ok]))
            fits[m] = CalibrationFit(m, slope, icpt, len(ok))
    return CrossoverCalibration(cells, fits)


@dataclass
class TrendCell:
    amplitude: float
    method: Method
    s_observed: float
    alpha_below: float
    alpha_above: float
    detected: bool
    curve: FluctuationCurve = field(repr=False, default=None)


@dataclass
class TrendStudy:
    cells: list
    delta: dict


def trend_crossover_study(alpha, trend_exponent, amplitudes, n, n_series,
                          methods=(DFA1, CMA, MDFA1), seed=0, workers=1,
                          search_lo=10.0, search_hi=None, min_improvement=0.05,
                          min_slope_change=0.05):
    """Trend-induced crossover position versus trend amplitude.

    Unit-variance surrogates get ``A (i/N)**q`` added; the breakpoint of
    each ensemble curve is detected and ``ln s'_x`` regressed on ``ln A``.
    ``delta`` is minus that slope, per method.
    """
    methods = [as_method(m) for m in methods]
    amplitudes = [float(a) for a in amplitudes]
    if any(a <= 0 for a in amplitudes):
        raise ParameterError("trend amplitudes must be positive")
    if max(amplitudes) / min(amplitudes) < 10 - 1e-9 and len(amplitudes) > 1:
        raise ParameterError("amplitudes must span at least one decade")
    cells = []
    for amp in amplitudes:
        curves = ensemble_curves("trend", (n, alpha, amp, trend_exponent), n_series, methods, seed, workers)
        for m in methods:
            lo, hi = crossover_window(n, m, search_lo, search_hi)
            est = detect_crossover(curves[m], lo, hi, method=m, min_improvement=min_improvement,
                                  min_slope_change=min_slope_change)
            cells.append(TrendCell(amp, m, est.s_observed, est.alpha_below, est.alpha_above,
                                   est.detected, curves[m]))
    delta = {}
    for m in methods:
        ok = [c for c in cells if c.method == m and c.detected]
        if len(ok) >= 2:
            slope, _ = _ln_fit(np.log([c.amplitude for c in ok]), np.log([c.s_observed for c in ok]))
            delta[m] = -slope
    return TrendStudy(cells, delta)


def slope_above(curve, s_from: float) -> float:
    """Mean point-to-point slope over scales at or above ``s_from``."""
    ls = np.array(local_slopes(curve))
    sel = ls[:, 0] >= s_from
    if not sel.any():
        raise InsufficientDataError(f"no local slopes above s={s_from:g}")
    return float(ls[sel, 1].mean())
