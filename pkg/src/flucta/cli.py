"""Command-line entry point: ``flucta generate | analyze | fit | study``.

Every subcommand writes its outputs atomically and leaves a
``<output>.provenance`` sidecar holding the fully resolved configuration as
``key = value`` lines; ``flucta <cmd> --config <sidecar>`` repeats the run.

Exit status: 0 success, 1 usage error, 2 computation error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import FluctaError
from .fluctuation import (
    Method, check_grid, default_scale_grid, fluctuation_curve,
)
from .io import atomic_write, csv_text, read_csv, write_csv
from .scaling import detect_crossover, fit_alpha, fixed_lower_range, fixed_width_range
from .series import format_value, read_series, write_series
from .surrogate import (
    CrossoverSpec, GeneratorSpec, TrendSpec, add_trend, generate_crossover, generate_power_law,
)

log = logging.getLogger("flucta")

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE, EXIT_IO = 0, 1, 2, 3
STUDIES = ("alpha-vs-n", "scatter", "crossover-cal", "trend-crossover")


class UsageError(Exception):
    def __init__(self, messages):
        if isinstance(messages, str):
            messages = [messages]
        super().__init__("; ".join(messages))
        self.messages = list(messages)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    subcommand: str
    params: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.__dict__["params"][name]
        except KeyError:
            raise AttributeError(name) from None


# --------------------------------------------------------------------------
# argument parsing


def _float_list(text):
    try:
        return [float(v) for v in str(text).replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    vals = _float_list(text)
    if any(v != int(v) for v in vals):
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    return [int(v) for v in vals]


def _str_list(text):
    return [v for v in str(text).replace(" ", "").split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="flucta", description="Random-walk fluctuation analysis (FA, R/S, DFA, BMA, CMA, MDFA).")
    p.add_argument("--version", action="version", version=f"flucta {__version__}")
    sub = p.add_subparsers(dest="subcommand", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="key = value file; flags override its entries")
        sp.add_argument("--threads", type=int, default=None, help="worker cap (default: FLUCTA_THREADS or CPU count)")
        sp.add_argument("-v", "--verbose", action="store_true")

    g = sub.add_parser("generate", help="write a surrogate series")
    common(g)
    g.add_argument("--n", type=int)
    g.add_argument("--alpha", type=float)
    g.add_argument("--alpha1", type=float)
    g.add_argument("--alpha2", type=float)
    g.add_argument("--s-cross", type=int)
    g.add_argument("--trend-a", type=float, default=0.0)
    g.add_argument("--trend-q", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--no-normalize", action="store_true")
    g.add_argument("--out")

    a = sub.add_parser("analyze", help="fluctuation function of one series or an ensemble")
    common(a)
    a.add_argument("inputs", nargs="*")
    a.add_argument("--method", default="dfa")
    a.add_argument("--order", type=int)
    a.add_argument("--scales", type=_int_list)
    a.add_argument("--column")
    a.add_argument("--out")

    f = sub.add_parser("fit", help="scaling exponent / crossover of an s,F curve")
    common(f)
    f.add_argument("input", nargs="?")
    f.add_argument("--range", dest="range_kind", choices=("explicit", "fixed-lower", "fixed-width"), default="fixed-lower")
    f.add_argument("--s-lo", type=float)
    f.add_argument("--s-hi", type=float)
    f.add_argument("--n", type=int, help="series length (default: twice the largest scale)")
    f.add_argument("--crossover", action="store_true", help="also search for a crossover")
    f.add_argument("--method", help="method tag for crossover correction, e.g. dfa1, cma, mdfa1")
    f.add_argument("--search-lo", type=float)
    f.add_argument("--search-hi", type=float)
    f.add_argument("--min-improvement", type=float, default=0.05)
    f.add_argument("--min-slope-change", type=float, default=0.05)
    f.add_argument("--out")

    s = sub.add_parser("study", help="ensemble studies")
    common(s)
    s.add_argument("study", nargs="?", choices=STUDIES)
    s.add_argument("--alpha", type=float, default=0.7)
    s.add_argument("--alpha1", type=float, default=0.8)
    s.add_argument("--alpha2", type=float, default=0.5)
    s.add_argument("--lengths", type=_int_list, default=[50, 100, 200, 500, 1000, 5000])
    s.add_argument("--s-cross", type=_int_list, default=[50, 100, 200, 400, 800])
    s.add_argument("--amplitudes", type=_float_list, default=[3.0, 10.0, 30.0])
    s.add_argument("--trend-q", type=float, default=1.0)
    s.add_argument("--n", type=int, default=100000)
    s.add_argument("--n-series", type=int)
    s.add_argument("--methods", type=_str_list, default=["dfa1", "cma", "mdfa1"])
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--quick", type=int, default=1, help="divide ensemble sizes by this factor")
    s.add_argument("--search-lo", type=float,
                   help="breakpoint search start (default: method minimum, 10 for trend-crossover)")
    s.add_argument("--search-hi", type=float)
    s.add_argument("--min-improvement", type=float, default=0.05)
    s.add_argument("--min-slope-change", type=float, default=0.05)
    s.add_argument("--out-dir", default=".")
    return p


_DEFAULT_SERIES = {"alpha-vs-n": 1000, "scatter": 1000, "crossover-cal": 200, "trend-crossover": 100}


def _read_config_file(path) -> dict:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (t.strip() for t in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _coerce(action, value):
    if isinstance(action, argparse._StoreTrueAction):
        return str(value).lower() in ("1", "true", "yes", "on")
    if value in ("", "None"):
        return None
    if action.nargs in ("*", "+"):
        return [(action.type or str)(v) for v in _str_list(value)]
    conv = action.type or str
    try:
        return conv(value)
    except (ValueError, argparse.ArgumentTypeError) as exc:
        raise UsageError(f"config entry {action.dest}: {exc}") from None


def parse_config(argv) -> RunConfig:
    """Parse and validate; raises :class:`UsageError` listing every problem."""
    parser = build_parser()
    ns = parser.parse_args(argv)
    if ns.subcommand is None:
        raise UsageError("missing subcommand (generate, analyze, fit, study)")
    if ns.config:
        try:
            entries = _read_config_file(ns.config)
        except OSError as exc:
            raise UsageError(f"cannot read config {ns.config}: {exc}") from None
        entries.pop("subcommand", None)
        sub = parser._subparsers._group_actions[0].choices[ns.subcommand]
        actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
        unknown = sorted(set(entries) - set(actions))
        if unknown:
            raise UsageError([f"unknown config key {k!r}" for k in unknown])
        defaults = {k: _coerce(actions[k], v) for k, v in entries.items()}
        sub.set_defaults(**defaults)
        ns = parser.parse_args(argv)
    params = {k: v for k, v in vars(ns).items() if k not in ("subcommand", "config")}
    cfg = RunConfig(ns.subcommand, params)
    errors = _validate(cfg)
    if errors:
        raise UsageError(errors)
    return cfg


def _method_or_error(text, order, errors):
    try:
        return Method.parse(text, order)
    except FluctaError as exc:
        errors.append(str(exc))
        return None


def _validate(cfg: RunConfig) -> list[str]:
    e: list[str] = []
    p = cfg.params
    if p.get("threads") is not None and p["threads"] < 1:
        e.append("--threads must be >= 1")
    if cfg.subcommand == "generate":
        if p["n"] is None or p["n"] < 1:
            e.append("--n must be a positive integer")
        if p["alpha"] is None and None in (p["alpha1"], p["alpha2"], p["s_cross"]):
            e.append("give --alpha, or all of --alpha1 --alpha2 --s-cross")
        if p["alpha"] is not None and p["alpha1"] is not None:
            e.append("--alpha and --alpha1/--alpha2 are mutually exclusive")
        for key in ("alpha", "alpha1", "alpha2"):
            v = p[key]
            if v is not None and not 0 < v < 1.5:
                e.append(f"--{key} must lie in (0, 1.5)")
        if p["s_cross"] is not None and p["n"] and not 1 < p["s_cross"] < p["n"]:
            e.append("--s-cross must lie in (1, N)")
        if p["trend_q"] < 0:
            e.append("--trend-q must be >= 0")
        if p["seed"] < 0:
            e.append("--seed must be >= 0")
        if not p["out"]:
            e.append("--out is required")
    elif cfg.subcommand == "analyze":
        m = _method_or_error(p["method"], p["order"], e)
        p["method_obj"] = m
        if not p["inputs"]:
            e.append("at least one input series file is required")
        if not p["out"]:
            e.append("--out is required")
    elif cfg.subcommand == "fit":
        if not p["input"]:
            e.append("an input s,F CSV is required")
        if p["range_kind"] == "explicit" and (p["s_lo"] is None or p["s_hi"] is None):
            e.append("--range explicit needs --s-lo and --s-hi")
        if p["s_lo"] is not None and p["s_hi"] is not None and p["s_lo"] >= p["s_hi"]:
            e.append("--s-lo must be below --s-hi")
        if p["method"]:
            p["method_obj"] = _method_or_error(p["method"], None, e)
        else:
            p["method_obj"] = None
        if not 0 <= p["min_improvement"] < 1:
            e.append("--min-improvement must lie in [0, 1)")
        if p["min_slope_change"] < 0:
            e.append("--min-slope-change must be >= 0")
    elif cfg.subcommand == "study":
        if p["study"] is None:
            e.append(f"missing study type ({', '.join(STUDIES)})")
        methods = [_method_or_error(t, None, e) for t in p["methods"]]
        p["method_objs"] = [m for m in methods if m is not None]
        if p["quick"] < 1:
            e.append("--quick must be >= 1")
        if not 0 <= p["min_improvement"] < 1:
            e.append("--min-improvement must lie in [0, 1)")
        if p["min_slope_change"] < 0:
            e.append("--min-slope-change must be >= 0")
        n_series = p["n_series"] if p["n_series"] is not None else _DEFAULT_SERIES.get(p["study"], 100)
        p["n_series"] = n_series
        p["effective_series"] = max(n_series // p["quick"], 1)
        st = p["study"]
        if st in ("alpha-vs-n", "scatter"):
            if not 0 < p["alpha"] < 1.5:
                e.append("--alpha must lie in (0, 1.5)")
            if any(n < 40 for n in p["lengths"]):
                e.append("every length must be >= 40")
            if p["effective_series"] < 10:
                e.append("ensemble size after --quick must be >= 10")
            if st == "scatter" and len(p["method_objs"]) < 2:
                e.append("scatter needs a reference and at least one other method")
        if st == "crossover-cal":
            for key in ("alpha1", "alpha2"):
                if not 0 < p[key] < 1.5:
                    e.append(f"--{key} must lie in (0, 1.5)")
            bad = [s for s in p["s_cross"] if not 10 < s < p["n"] / 10]
            if bad:
                e.append(f"--s-cross values {bad} outside (10, N/10)")
        if st == "trend-crossover":
            if p["search_lo"] is None:
                p["search_lo"] = 10.0
            if not 0 < p["alpha"] < 1.5:
                e.append("--alpha must lie in (0, 1.5)")
            amps = p["amplitudes"]
            if not amps or min(amps) <= 0:
                e.append("--amplitudes must be positive")
            elif len(amps) > 1 and max(amps) / min(amps) < 10 - 1e-9:
                e.append("--amplitudes must span at least one decade")
    return e


# --------------------------------------------------------------------------
# provenance


def _prov_value(v):
    if isinstance(v, (list, tuple)):
        return ",".join(_prov_value(x) for x in v)
    if isinstance(v, float):
        return format_value(v)
    if isinstance(v, Method):
        return str(v)
    return str(v)


_INTERNAL = ("method_obj", "method_objs", "effective_series", "verbose")


def provenance_text(cfg: RunConfig, extra: dict | None = None) -> str:
    lines = [f"# flucta {__version__} run configuration", f"# subcommand = {cfg.subcommand}"]
    for k in sorted(cfg.params):
        v = cfg.params[k]
        if k in _INTERNAL or v is None or k == "threads":
            continue
        if isinstance(v, bool) and not v:
            continue
        lines.append(f"{k} = {_prov_value(v)}")
    for k, v in (extra or {}).items():
        lines.append(f"# {k} = {_prov_value(v)}")
    return "\n".join(lines) + "\n"


def _write_provenance(path, cfg, extra=None):
    atomic_write(str(path) + ".provenance", provenance_text(cfg, extra))


# --------------------------------------------------------------------------
# subcommands


def _workers(cfg):
    from .experiments import default_workers

    return cfg.params.get("threads") or default_workers()


def _run_generate(cfg):
    p = cfg.params
    if p["alpha"] is not None:
        x = generate_power_law(GeneratorSpec(p["n"], p["alpha"], p["seed"], not p["no_normalize"]))
    else:
        x = generate_crossover(CrossoverSpec(p["n"], p["alpha1"], p["alpha2"], p["s_cross"], p["seed"], not p["no_normalize"]))
    if p["trend_a"]:
        x = add_trend(x, TrendSpec(p["trend_a"], p["trend_q"]))
    write_series(p["out"], x)
    _write_provenance(p["out"], cfg)
    log.info("wrote %d samples to %s", len(x), p["out"])


def _run_analyze(cfg):
    p = cfg.params
    method = p["method_obj"]
    series = [read_series(f, p["column"]) for f in p["inputs"]]
    n = len(series[0])
    grid = check_grid(p["scales"], n, method) if p["scales"] else default_scale_grid(n, method)
    curve = fluctuation_curve(series, method, grid, workers=_workers(cfg))
    if np.all(curve.F <= 1e-12 * max(1.0, float(np.abs(series[0].values).max()))):
        log.warning("all fluctuation values are ~0 (constant or fully detrended input)")
    write_csv(p["out"], ["s", "F"], curve.rows())
    _write_provenance(p["out"], cfg, {"n": n, "ensemble_size": len(series), "method": method})


def _read_curve(path):
    header, rows = read_csv(path)
    try:
        i_s, i_f = header.index("s"), header.index("F")
    except ValueError:
        raise FluctaError(f"{path}: expected columns 's' and 'F', got {header}") from None
    s = np.array([float(r[i_s]) for r in rows])
    F = np.array([float(r[i_f]) for r in rows])
    return s, F


def _run_fit(cfg):
    p = cfg.params
    s, F = _read_curve(p["input"])
    n = p["n"] if p["n"] is not None else int(2 * s.max())
    kind = p["range_kind"]
    if kind == "explicit":
        lo, hi = p["s_lo"], p["s_hi"]
    elif kind == "fixed-width":
        lo, hi = fixed_width_range(n)
    else:
        lo, hi = fixed_lower_range(n, 10.0 if p["s_lo"] is None else p["s_lo"])
    est = fit_alpha((s, F), lo, hi)
    header = ["alpha", "intercept", "s_lo", "s_hi", "n_points", "residual_rms"]
    row = [est.alpha, est.intercept, est.fit_range[0], est.fit_range[1], est.n_points, est.residual_rms]
    summary = [f"alpha = {est.alpha:.6f} over s in [{est.fit_range[0]:g}, {est.fit_range[1]:g}] "
               f"({est.n_points} points, rms residual {est.residual_rms:.3g})"]
    if p["crossover"]:
        cx = detect_crossover((s, F), p["search_lo"], p["search_hi"], method=p["method_obj"],
                              min_improvement=p["min_improvement"],
                              min_slope_change=p["min_slope_change"])
        header += ["crossover_detected", "s_observed", "s_corrected", "alpha_below", "alpha_above", "sse_improvement"]
        row += [cx.detected, cx.s_observed, cx.s_corrected, cx.alpha_below, cx.alpha_above, cx.sse_improvement]
        if cx.detected:
            summary.append(f"crossover at s' = {cx.s_observed:.1f} (corrected {cx.s_corrected:.1f}); "
                           f"slopes {cx.alpha_below:.3f} below, {cx.alpha_above:.3f} above")
        else:
            summary.append(f"no crossover (SSE improvement {cx.sse_improvement:.3f}, thresholds: "
                           f"improvement {p['min_improvement']}, slope change {p['min_slope_change']})")
    text = "\n".join(summary)
    print(text)
    if p["out"]:
        write_csv(p["out"], header, [row])
        _write_provenance(p["out"], cfg, {"n": n})


def _run_study(cfg):
    from . import experiments as ex

    p = cfg.params
    out = Path(p["out_dir"])
    methods = p["method_objs"]
    m_series = p["effective_series"]
    workers = _workers(cfg)
    study = p["study"]
    report = [f"study {study}: {m_series} series per cell, seed {p['seed']}"]
    files = {}
    if study in ("alpha-vs-n", "scatter"):
        stats = ex.alpha_vs_length_study(p["alpha"], p["lengths"], m_series, methods, p["seed"], workers)
        if study == "alpha-vs-n":
            files["alpha_vs_n.csv"] = csv_text(
                ["N", "method", "mean_alpha", "sd_alpha", "n_series", "n_failed", "s_lo", "s_hi"],
                [[st.n, str(st.method), st.mean_alpha, st.sd_alpha, st.n_series, st.n_failed, *st.fit_range] for st in stats],
            )
            files["alpha_histograms.csv"] = csv_text(
                ["N", "method", "bin_center", "frequency"],
                [[st.n, str(st.method), c, f] for st in stats for c, f in st.histogram],
            )
            for st in stats:
                report.append(f"N={st.n:6d} {str(st.method):6s} mean={st.mean_alpha:.4f} sd={st.sd_alpha:.4f}")
        else:
            rows = ex.scatter_study(stats, methods[0])
            files["scatter_sd.csv"] = csv_text(
                ["N", "reference", "other", "sd1", "sd2"],
                [[r.n, str(r.reference), str(r.other), r.stats.sd1, r.stats.sd2] for r in rows],
            )
            files["scatter_pairs.csv"] = csv_text(
                ["N", "reference", "other", "alpha_ref", "alpha_other"],
                [[r.n, str(r.reference), str(r.other), a, b] for r in rows for a, b in r.stats.pairs],
            )
            for r in rows:
                report.append(f"N={r.n:6d} {r.reference} vs {r.other}: SD1={r.stats.sd1:.4f} SD2={r.stats.sd2:.4f}")
    elif study == "crossover-cal":
        res = ex.crossover_calibration_study(
            p["alpha1"], p["alpha2"], p["s_cross"], p["n"], m_series, methods, p["seed"], workers,
            p["search_lo"], p["search_hi"], p["min_improvement"], p["min_slope_change"])
        files["crossover_cells.csv"] = csv_text(
            ["s_cross", "method", "detected", "s_observed", "alpha_below", "alpha_above"],
            [[c.s_cross, str(c.method), c.detected, c.s_observed, c.alpha_below, c.alpha_above] for c in res.cells],
        )
        files["crossover_fits.csv"] = csv_text(
            ["method", "slope", "intercept", "n_points"],
            [[str(f.method), f.slope, f.intercept, f.n_points] for f in res.fits.values()],
        )
        files["crossover_curves.csv"] = _curves_csv([(c.s_cross, c.curve) for c in res.cells], "s_cross")
        for f in res.fits.values():
            report.append(f"{str(f.method):6s} ln s_x = {f.slope:.3f} ln s'_x {f.intercept:+.3f} ({f.n_points} points)")
    elif study == "trend-crossover":
        res = ex.trend_crossover_study(
            p["alpha"], p["trend_q"], p["amplitudes"], p["n"], m_series, methods, p["seed"], workers,
            p["search_lo"], p["search_hi"], p["min_improvement"], p["min_slope_change"])
        files["trend_cells.csv"] = csv_text(
            ["amplitude", "method", "detected", "s_observed", "alpha_below", "alpha_above"],
            [[c.amplitude, str(c.method), c.detected, c.s_observed, c.alpha_below, c.alpha_above] for c in res.cells],
        )
        files["trend_delta.csv"] = csv_text(["method", "delta"], [[str(m), d] for m, d in res.delta.items()])
        files["trend_curves.csv"] = _curves_csv([(c.amplitude, c.curve) for c in res.cells], "amplitude")
        for m, d in res.delta.items():
            report.append(f"{str(m):6s} delta = {d:.3f}")
    for name, text in files.items():
        atomic_write(out / name, text)
    atomic_write(out / "summary.txt", "\n".join(report) + "\n")
    _write_provenance(out / "summary.txt", cfg, {"member_seeds": f"seed ^ index, index < {m_series}"})
    print("\n".join(report))


def _curves_csv(tagged, tag_name):
    rows = []
    for tag, curve in tagged:
        for s, F in curve.rows():
            rows.append([tag, str(curve.method), s, F])
    return csv_text([tag_name, "method", "s", "F"], rows)


_RUNNERS = {"generate": _run_generate, "analyze": _run_analyze, "fit": _run_fit, "study": _run_study}


def run(cfg: RunConfig) -> int:
    try:
        _RUNNERS[cfg.subcommand](cfg)
    except FluctaError as exc:
        log.error("%s", exc)
        return EXIT_COMPUTE
    except OSError as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    return EXIT_OK


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    logging.basicConfig(format="flucta: %(levelname)s: %(message)s", level=logging.INFO if "-v" in argv or "--verbose" in argv else logging.WARNING)
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        for msg in exc.messages:
            print(f"flucta: usage error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
