"""Command-line front end.

Every subcommand writes ``<command>.tsv`` and/or ``<command>.json`` into
``--out`` and echoes the TSV to stdout. Exit codes: 0 success, 1 usage error,
2 data error, 3 no feasible candidate.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import report
from .data import (
    CpiCatalog,
    MonthKey,
    MonthlySeries,
    first_difference,
    format_catalog_csv,
    normalize_to_peak,
    parse_catalog_csv,
    parse_price_csv,
    read_wide_csv,
)
from .errors import CpiModelError, NoFeasibleCandidate
from .regression import actual_vs_predicted_r2, prediction_span, predict_series
from .scenario import (
    coefficient_ratio,
    compare_models,
    extend_with_growth,
    project_price,
    unit_sensitivity,
)
from .search import SearchConfig, best_fit_search
from .stability import backtrack_models, reliability_verdict
from .stats import adf_test, correlation_matrix, engle_granger_test
from .synthkit import generate_catalog, random_truth, synthesize_price, with_relative_noise

log = logging.getLogger("cpimodel")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INFEASIBLE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _month(text: str) -> MonthKey:
    try:
        return MonthKey.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _labelled(items: list[str] | None, what: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for item in items or []:
        label, sep, value = item.partition("=")
        if not sep or not label:
            raise UsageError(f"{what} must look like LABEL=VALUE, got {item!r}")
        out[label] = value
    return out


def _lag_order(text: str) -> int | str:
    if text in ("auto", "aic"):
        return text
    try:
        return _nonneg(text)
    except (argparse.ArgumentTypeError, ValueError):
        raise UsageError(f"--lags must be auto, aic or a non-negative integer, got {text!r}") from None


def _read_catalog(path: str) -> CpiCatalog:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_catalog_csv(fh)


def _read_price(path: str, column: str | None) -> tuple[str, MonthlySeries]:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_price_csv(fh, column)


def _read_wide_any(path: str) -> dict[str, MonthlySeries]:
    with open(path, encoding="utf-8", newline="") as fh:
        return read_wide_csv(fh)


def _search_config(args, anchor: MonthKey) -> SearchConfig:
    return SearchConfig(
        anchor=anchor,
        start=args.start,
        max_lag=args.max_lag,
        max_lead=args.max_lead,
        top_k=args.top,
        min_obs=args.min_obs,
    )


def _emit(args, name, config, inputs, result, header, rows) -> None:
    manifest = report.build_manifest(name, config, inputs)
    written, tsv = report.write_reports(args.out, name, manifest, result, header, rows, args.format)
    sys.stdout.write(report.strip_manifest(tsv))
    for p in written:
        log.info("wrote %s", p)


# ------------------------------------------------------------ subcommands


def cmd_search(args) -> int:
    catalog = _read_catalog(args.cpi)
    ticker, price = _read_price(args.prices, args.price_column)
    anchor = args.anchor or price.end
    cfg = _search_config(args, anchor)
    res = best_fit_search(price, catalog, cfg, threads=args.threads)
    result = {
        "ticker": ticker,
        "model": res.best.spec.to_dict(),
        "best": report.fit_to_dict(res.best),
        "ranked": [report.fit_to_dict(f) for f in res.ranked],
        "n_candidates": res.n_candidates,
        "n_rejected": res.n_rejected,
        "lead_cap": res.lead_cap,
    }
    rows = [[i + 1, *report.model_row(f.spec, f.sterr), f.r2] for i, f in enumerate(res.ranked)]
    config = {**cfg.to_dict(), "threads": args.threads, "ticker": ticker}
    _emit(args, "search", config, [args.prices, args.cpi], result,
          ["rank", *report.MODEL_COLUMNS, "R2"], rows)
    return EXIT_OK


def cmd_stability(args) -> int:
    catalog = _read_catalog(args.cpi)
    ticker, price = _read_price(args.prices, args.price_column)
    anchor = args.anchor or price.end
    cfg = _search_config(args, anchor)
    rep = backtrack_models(price, catalog, anchor, cfg, window=args.window, threads=args.threads)
    quorum = args.quorum if args.quorum is not None else rep.window - 1
    strict = reliability_verdict(rep, "strict")
    majority = reliability_verdict(rep, "majority", quorum)
    if strict:
        verdict = "reliable (strict)"
    elif majority:
        verdict = f"reliable (majority {rep.majority_count}/{rep.window})"
    else:
        verdict = "unreliable"
    anchors = []
    for o in rep.outcomes:
        entry = {"anchor": str(o.anchor)}
        if o.best is not None:
            entry.update(report.fit_to_dict(o.best))
            entry["n_candidates"] = o.result.n_candidates
            entry["lead_cap"] = o.result.lead_cap
        else:
            entry["error"] = o.error
        anchors.append(entry)
    result = {
        "ticker": ticker,
        "verdict": verdict,
        "strict": strict,
        "majority": majority,
        "quorum": quorum,
        "majority_pair": list(rep.majority_pair) if rep.majority_pair else None,
        "majority_count": rep.majority_count,
        "lag_drift": {k: list(v) for k, v in rep.lag_drift.items()},
        "coeff_drift": {k: list(v) for k, v in rep.coeff_drift.items()},
        "anchors": anchors,
        "model": rep.outcomes[-1].best.spec.to_dict() if rep.outcomes[-1].best else None,
    }
    rows = []
    for o in reversed(rep.outcomes):  # newest first, as in the monthly tables
        if o.best is None:
            rows.append([str(o.anchor), *([None] * 9), o.error])
        else:
            rows.append([str(o.anchor), *report.model_row(o.best.spec, o.best.sterr), ""])
    config = {**cfg.to_dict(), "window": args.window, "threads": args.threads, "ticker": ticker}
    _emit(args, "stability", config, [args.prices, args.cpi], result,
          ["month", *report.MODEL_COLUMNS, "note"], rows)
    sys.stdout.write(f"verdict\t{verdict}\n")
    return EXIT_OK


def _collect_series(args) -> tuple[list[tuple[str, MonthlySeries]], list[str]]:
    series: list[tuple[str, MonthlySeries]] = []
    inputs = []
    for path in (args.prices, args.cpi):
        if path:
            series.extend(_read_wide_any(path).items())
            inputs.append(path)
    if not series:
        raise UsageError("give --prices and/or --cpi")
    if args.columns:
        wanted = args.columns.split(",")
        have = dict(series)
        missing = [c for c in wanted if c not in have]
        if missing:
            raise UsageError(f"unknown columns: {', '.join(missing)}")
        series = [(c, have[c]) for c in wanted]
    if args.diff:
        series = [(f"d{name}", first_difference(s)) for name, s in series]
    return series, inputs


def cmd_corr(args) -> int:
    series, inputs = _collect_series(args)
    cm = correlation_matrix(series, scan=args.scan, max_shift=args.max_shift)
    rows = []
    for i, li in enumerate(cm.labels):
        row = [li]
        for j in range(len(cm.labels)):
            if j > i:
                row.append("")
                continue
            v = cm.values[i, j]
            cell = "NA" if np.isnan(v) else f"{v:.3f}"
            if args.scan and i != j:
                lm = cm.lag_max[i, j]
                cell += " [NA]" if np.isnan(lm) else f" [{lm:.3f}@{int(cm.lag_at_max[i, j])}]"
            row.append(cell)
        rows.append(row)
    config = {"diff": args.diff, "scan": args.scan, "max_shift": args.max_shift, "columns": args.columns}
    _emit(args, "corr", config, inputs, cm.to_dict(), ["", *cm.labels], rows)
    return EXIT_OK


def cmd_adf(args) -> int:
    series, inputs = _collect_series(args)
    lags = _lag_order(args.lags)
    results = {}
    rows = []
    for name, s in series:
        r = adf_test(s, args.level, lags)
        results[name] = r.to_dict()
        rows.append([name, r.statistic, r.lag_order, r.n_obs, r.critical_values[args.level],
                     "I(0)" if r.reject_unit_root else "unit root"])
    config = {"level": args.level, "lags": args.lags, "diff": args.diff, "columns": args.columns}
    _emit(args, "adf", config, inputs, {"series": results}, ["series", "stat", "lags", "n_obs", f"crit{args.level}%", "verdict"], rows)
    return EXIT_OK


def cmd_coint(args) -> int:
    catalog = _read_catalog(args.cpi)
    ticker, price = _read_price(args.prices, args.price_column)
    spec = report.load_model(args.model)
    first, last = prediction_span(spec, catalog)
    first = max(first, args.start, price.start)
    last = min(last, price.end, args.anchor or price.end)
    predicted = predict_series(spec, catalog, first, last)
    actual = price.slice(first, last)
    r2 = actual_vs_predicted_r2(actual, predicted)
    lags = _lag_order(args.lags)
    eg = engle_granger_test(actual, predicted, args.level, lags)
    result = {"ticker": ticker, "model": spec.to_dict(), "first": str(first), "last": str(last),
              "r2": r2, **eg.to_dict(),
              "residuals": [[str(m), float(a - p)] for (m, a), p in zip(actual.items(), predicted.values)]}
    rows = [[ticker, str(first), str(last), r2, eg.adf.statistic, eg.adf.critical_values[args.level],
             "cointegrated" if eg.cointegrated else "not cointegrated"]]
    config = {"start": str(args.start), "anchor": str(args.anchor) if args.anchor else None,
              "level": args.level, "lags": args.lags}
    _emit(args, "coint", config, [args.prices, args.cpi, args.model], result,
          ["ticker", "from", "to", "R2", "resid_adf", f"crit{args.level}%", "verdict"], rows)
    return EXIT_OK


def cmd_sensitivity(args) -> int:
    spec = report.load_model(args.model)
    ratio = coefficient_ratio(spec)
    dollars, pct = unit_sensitivity(spec, args.price)
    result = {"model": spec.to_dict(), "ratio_b1_b2": ratio, "current_price": args.price,
              "dollars_per_unit": dollars, "percent_per_unit": pct,
              "price_to_b1": args.price / spec.b1 if spec.b1 else None}
    rows = [[spec.code1, spec.code2, ratio, dollars, pct]]
    _emit(args, "sensitivity", {"price": args.price}, [args.model], result,
          ["C1", "C2", "b1/b2", "$/unit C1", "%/unit C1"], rows)
    return EXIT_OK


def _parse_horizon(text: str) -> tuple[MonthKey, MonthKey]:
    a, sep, b = text.partition(":")
    if not sep:
        raise UsageError("--horizon must look like YYYY-MM:YYYY-MM")
    try:
        first, last = MonthKey.parse(a), MonthKey.parse(b)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if last < first:
        raise UsageError("--horizon end precedes its start")
    return first, last


def cmd_compare(args) -> int:
    horizon = _parse_horizon(args.horizon)
    model_paths = _labelled(args.model, "--model")
    if not model_paths:
        raise UsageError("give at least one --model LABEL=PATH")
    specs = {label: report.load_model(p) for label, p in model_paths.items()}
    inputs = [args.cpi, *model_paths.values()]
    history = dict(_read_catalog(args.cpi))
    if args.path:
        inputs.append(args.path)
        for code, s in _read_wide_any(args.path).items():
            base = history.get(code)
            if base is not None and base.start < s.start:
                head = base.window(base.start, min(base.end, s.start - 1))
                gap = s.start - (base.start + len(head))
                if gap > 0:
                    raise UsageError(f"--path for {code} leaves a gap after history")
                s = MonthlySeries(base.start, np.concatenate([head, s.values]))
            history[code] = s
    try:
        rates = {k: float(v) / 100.0 for k, v in _labelled(args.growth, "--growth").items()}
    except ValueError as exc:
        raise UsageError(f"--growth rate: {exc}") from None
    path = extend_with_growth(history, rates, horizon[1])
    entries = {}
    entry_args = _labelled(args.entry, "--entry")
    for label, spec in specs.items():
        if label in entry_args:
            try:
                entries[label] = float(entry_args[label])
            except ValueError:
                raise UsageError(f"--entry {label}: not a number") from None
        else:
            entries[label] = float(project_price(spec, path, horizon[0], horizon[0]).values[0])
    ranked = compare_models(specs, path, horizon, entries)
    result = {"horizon": [str(horizon[0]), str(horizon[1])],
              "ranking": [{"label": o.label, "entry": o.entry_price, "end": o.end_price,
                           "pct_return": o.pct_return} for o in ranked],
              "projections": {label: [[str(m), v] for m, v in project_price(spec, path, *horizon).items()]
                              for label, spec in specs.items()}}
    rows = [[i + 1, o.label, o.entry_price, o.end_price, o.pct_return] for i, o in enumerate(ranked)]
    config = {"horizon": args.horizon, "growth_pct_per_month": {k: v * 100 for k, v in rates.items()},
              "entry": entry_args}
    _emit(args, "compare", config, inputs, result, ["rank", "label", "entry", "end", "return%"], rows)
    return EXIT_OK


def cmd_synth(args) -> int:
    price_first = args.start
    last = args.anchor or MonthKey(2012, 11)
    cat_first = price_first - args.max_lag
    catalog = generate_catalog(args.n_series, cat_first, last, args.seed)
    truth = random_truth(catalog, price_first, last, args.seed + 1, max_lag=args.max_lag)
    truth = with_relative_noise(truth, catalog, args.noise)
    price = synthesize_price(truth, catalog)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "cpi.csv").write_text(format_catalog_csv(catalog), encoding="utf-8")
    (out / "prices.csv").write_text(format_catalog_csv({"SYN": price}), encoding="utf-8")
    truth_doc = {"model": truth.spec.to_dict(), "noise_sigma": truth.noise_sigma, "seed": truth.seed,
                 "first": str(truth.first), "last": str(truth.last)}
    (out / "truth.json").write_text(json.dumps(truth_doc, indent=2) + "\n", encoding="utf-8")
    config = {"seed": args.seed, "n_series": args.n_series, "start": str(price_first), "anchor": str(last),
              "max_lag": args.max_lag, "noise": args.noise}
    _emit(args, "synth", config, [out / "cpi.csv", out / "prices.csv"], truth_doc,
          ["item", *report.MODEL_COLUMNS[:-1], "sigma"], [["truth", *report.model_row(truth.spec)[:-1], truth.noise_sigma]])
    return EXIT_OK


def cmd_normalize(args) -> int:
    series = _read_wide_any(args.prices)
    normed = {name: normalize_to_peak(s, args.peak_from, args.peak_to) for name, s in series.items()}
    first = min(s.start for s in normed.values())
    last = max(s.end for s in normed.values())
    rows = []
    for k in range(first.ordinal, last.ordinal + 1):
        m = MonthKey.from_ordinal(k)
        rows.append([str(m), *[(s.at(m) if s.start <= m <= s.end else None) for s in normed.values()]])
    result = {name: {"start": str(s.start), "values": s.values.tolist()} for name, s in normed.items()}
    config = {"peak_from": str(args.peak_from), "peak_to": str(args.peak_to)}
    _emit(args, "normalize", config, [args.prices], result, ["month", *normed], rows)
    return EXIT_OK


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cpimodel", description="Share price models built from lagged CPI pairs.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def outputs(sp):
        sp.add_argument("--out", default=".", help="report directory (default: current)")
        sp.add_argument("--format", choices=("tsv", "json", "both"), default="both")

    def search_flags(sp):
        sp.add_argument("--prices", required=True)
        sp.add_argument("--price-column")
        sp.add_argument("--cpi", required=True)
        sp.add_argument("--start", type=_month, default=MonthKey(2003, 7))
        sp.add_argument("--anchor", type=_month, help="default: last price month")
        sp.add_argument("--max-lag", type=_nonneg, default=11)
        sp.add_argument("--max-lead", type=_nonneg, default=8)
        sp.add_argument("--top", type=int, default=10)
        sp.add_argument("--min-obs", type=int, default=60)
        sp.add_argument("--threads", type=int, default=None, help="default: all cores; never changes results")
        outputs(sp)

    def series_flags(sp):
        sp.add_argument("--prices")
        sp.add_argument("--cpi")
        sp.add_argument("--columns", help="comma-separated subset, in output order")
        sp.add_argument("--diff", action="store_true", help="use first differences")
        outputs(sp)

    sp = sub.add_parser("search", help="exhaustive best-fit search at one anchor month")
    search_flags(sp)
    sp.set_defaults(func=cmd_search)

    sp = sub.add_parser("stability", help="best fits over consecutive anchor months")
    search_flags(sp)
    sp.add_argument("--window", type=int, default=8)
    sp.add_argument("--quorum", type=int, help="majority quorum (default window-1)")
    sp.set_defaults(func=cmd_stability)

    sp = sub.add_parser("corr", help="cross-correlation matrix")
    series_flags(sp)
    sp.add_argument("--scan", action="store_true", help="also report lag-maximised coefficients")
    sp.add_argument("--max-shift", type=_nonneg, default=11)
    sp.set_defaults(func=cmd_corr)

    sp = sub.add_parser("adf", help="augmented Dickey-Fuller test per series")
    series_flags(sp)
    sp.add_argument("--level", type=int, choices=(1, 5, 10), default=5)
    sp.add_argument("--lags", default="auto", help="auto (fixed rule), aic, or an integer")
    sp.set_defaults(func=cmd_adf)

    sp = sub.add_parser("coint", help="R² and residual cointegration test of actual vs model")
    sp.add_argument("--prices", required=True)
    sp.add_argument("--price-column")
    sp.add_argument("--cpi", required=True)
    sp.add_argument("--model", required=True, help="model JSON (bare spec or search/stability report)")
    sp.add_argument("--start", type=_month, default=MonthKey(2003, 7))
    sp.add_argument("--anchor", type=_month)
    sp.add_argument("--level", type=int, choices=(1, 5, 10), default=5)
    sp.add_argument("--lags", default="aic", help="residual ADF lags: aic, auto, or an integer")
    outputs(sp)
    sp.set_defaults(func=cmd_coint)

    sp = sub.add_parser("sensitivity", help="b1/b2 ratio and unit sensitivity to the first CPI")
    sp.add_argument("--model", required=True)
    sp.add_argument("--price", type=float, required=True, help="current share price")
    outputs(sp)
    sp.set_defaults(func=cmd_sensitivity)

    sp = sub.add_parser("compare", help="rank models by projected return under a CPI scenario")
    sp.add_argument("--model", action="append", metavar="LABEL=PATH")
    sp.add_argument("--entry", action="append", metavar="LABEL=PRICE", help="default: model price at horizon start")
    sp.add_argument("--cpi", required=True, help="CPI history")
    sp.add_argument("--path", help="absolute CPI levels overriding/extending history")
    sp.add_argument("--growth", action="append", metavar="CODE=PCT", help="monthly growth in percent")
    sp.add_argument("--horizon", required=True, metavar="YYYY-MM:YYYY-MM")
    outputs(sp)
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("synth", help="write a seeded synthetic catalog, price and truth")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--n-series", type=int, default=20)
    sp.add_argument("--start", type=_month, default=MonthKey(2003, 7))
    sp.add_argument("--anchor", type=_month, help="last month (default 2012-11)")
    sp.add_argument("--max-lag", type=_nonneg, default=11)
    sp.add_argument("--noise", type=float, default=0.01, help="noise sigma as a fraction of price std")
    outputs(sp)
    sp.set_defaults(func=cmd_synth)

    sp = sub.add_parser("normalize", help="divide each price column by its peak in a window")
    sp.add_argument("--prices", required=True)
    sp.add_argument("--peak-from", type=_month, default=MonthKey(2003, 1))
    sp.add_argument("--peak-to", type=_month, default=MonthKey(2009, 12))
    outputs(sp)
    sp.set_defaults(func=cmd_normalize)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"cpimodel: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NoFeasibleCandidate as exc:
        print(f"cpimodel: no feasible candidate: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (CpiModelError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"cpimodel: data error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
