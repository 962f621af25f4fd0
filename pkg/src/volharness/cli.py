"""Command-line pipeline: simulate / ingest / estimate / fit / report.

Each stage reads files the previous one wrote, so every step is
independently testable and cacheable.  Every output directory gets exactly
one manifest echoing the command, options, input digests and version;
output bytes are deterministic for identical manifests (the timestamp
honors SOURCE_DATE_EPOCH).  VOLHARNESS_THREADS caps kernel parallelism.
"""

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
from datetime import date, datetime, timezone
from pathlib import Path

from . import __version__, estimators, kernels, marketdata, simlab
from .errors import DataError, NumericalError, UsageError, VolharnessError
from .model import SpecName
from .study import (
    StudyConfig,
    Window,
    fit_result_to_dict,
    render_coeff_table,
    render_figure_data,
    run_study,
)

logger = logging.getLogger(__name__)

_SIM_KEYS = {
    "days", "steps_per_day", "drift_pct", "sigma_pct", "sigma_high_pct",
    "regime_block_days", "jump_intensity", "jump_mean_pct", "jump_std_pct",
    "seed", "start", "price0", "entities", "symbol_prefix",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 instead of argparse's 2
        raise UsageError(message)


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        return datetime.fromtimestamp(int(epoch), tz=timezone.utc).isoformat()
    return datetime.now(timezone.utc).isoformat()


def _write_json(path: Path, doc) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")


def _write_manifest(out_dir: Path, command: str, options: dict, inputs: dict) -> None:
    _write_json(
        out_dir / "manifest.json",
        {
            "command": command,
            "options": options,
            "inputs": {str(k): v for k, v in inputs.items()},
            "artifact_version": __version__,
            "timestamp": _timestamp(),
        },
    )


def _apply_thread_cap() -> None:
    raw = os.environ.get("VOLHARNESS_THREADS")
    if raw is None:
        return
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"VOLHARNESS_THREADS must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"VOLHARNESS_THREADS must be >= 1, got {n}")
    if kernels.active_backend() == "numba":
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------


def _cmd_ingest(args) -> int:
    out = Path(args.out)
    universe = marketdata.load_universe_csv(args.input, args.asset_class)
    prices_dir = out / "prices"
    prices_dir.mkdir(parents=True, exist_ok=True)
    for series in universe:
        marketdata.write_price_csv(series, prices_dir / f"{series.symbol}.csv")
    _write_manifest(
        out,
        "ingest",
        {"input": str(args.input), "asset_class": args.asset_class,
         "symbols": [s.symbol for s in universe]},
        {args.input: _sha256(args.input)},
    )
    return 0


def _read_ingest_manifest(data_dir: Path) -> dict:
    manifest = data_dir / "manifest.json"
    if not manifest.exists():
        raise DataError(f"{data_dir} has no manifest.json; run `ingest` first")
    with open(manifest, encoding="utf-8") as fh:
        return json.load(fh)


def _cmd_estimate(args) -> int:
    data_dir = Path(args.data)
    manifest = _read_ingest_manifest(data_dir)
    asset_class = manifest.get("options", {}).get("asset_class")
    if asset_class not in marketdata.ASSET_CLASSES:
        raise DataError(f"ingest manifest lacks a valid asset_class (got {asset_class!r})")
    price_files = sorted((data_dir / "prices").glob("*.csv"))
    if not price_files:
        raise DataError(f"no price files under {data_dir}/prices")

    bv_scaling = args.bv_scaling == "on"
    panel, dropped, inputs = [], [], {}
    for path in price_files:
        inputs[path] = _sha256(path)
        series = marketdata.load_price_csv(path, asset_class)
        returns = marketdata.to_intraday_returns(series, args.grid_minutes, args.min_coverage)
        dropped.extend(returns.dropped)
        measure_series, excluded = estimators.build_series(
            series.symbol, asset_class, returns.days, args.bv_skips, bv_scaling
        )
        dropped.extend(excluded)
        panel.append(measure_series)

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    estimators.write_measures_csv(panel, out)
    marketdata.write_dropped_report(dropped, out.with_suffix(out.suffix + ".dropped.csv"))
    _write_manifest(
        out.parent,
        "estimate",
        {
            "data": str(args.data), "grid_minutes": args.grid_minutes,
            "min_coverage": args.min_coverage, "bv_skips": args.bv_skips,
            "bv_scaling": args.bv_scaling, "asset_class": asset_class,
            "out": str(args.out),
        },
        inputs,
    )
    return 0


def _parse_windows(raw_windows) -> tuple:
    if not raw_windows:
        return (Window(),)
    windows = []
    for raw in raw_windows:
        try:
            lo, hi = raw.split(":")
            windows.append(Window(date.fromisoformat(lo), date.fromisoformat(hi)))
        except ValueError:
            raise UsageError(
                f"window must look like YYYY-MM-DD:YYYY-MM-DD, got {raw!r}"
            ) from None
    return tuple(windows)


def _parse_specs(raw: str) -> tuple:
    names = [s.strip() for s in raw.split(",") if s.strip()]
    if not names:
        raise UsageError("no specs given")
    specs = []
    for name in names:
        try:
            specs.append(SpecName(name))
        except ValueError:
            valid = ", ".join(s.value for s in SpecName)
            raise UsageError(f"unknown spec {name!r}; valid specs: {valid}") from None
    return tuple(specs)


def _parse_horizons(raw: str) -> tuple:
    try:
        horizons = tuple(sorted({int(h) for h in raw.split(",") if h.strip()}))
    except ValueError:
        raise UsageError(f"horizons must be a comma list of integers, got {raw!r}") from None
    if not horizons:
        raise UsageError("no horizons given")
    return horizons


def _entity_doc(fit) -> dict:
    doc = fit_result_to_dict(fit)
    doc["significant_5pct"] = {
        lab: bool(fit.p_values[lab] < 0.05) for lab in fit.labels
    }
    return doc


def _cmd_fit(args) -> int:
    panel = estimators.read_measures_csv(args.measures)
    config = StudyConfig(
        specs=_parse_specs(args.spec),
        horizons=_parse_horizons(args.horizons),
        windows=_parse_windows(args.window),
        mode=args.mode,
        nw_lag=args.nw_lag,
        wls_weights=args.wls_weights,
        weight_floor=args.weight_floor,
        target=args.target,
        fixed_effects=args.fixed_effects,
    )
    results = run_study(panel, config)

    out = Path(args.out)
    index = []
    for entry in results.entries:
        cell = {
            "spec": entry.spec.value,
            "horizon": entry.horizon,
            "window": entry.window,
            "mode": results.mode,
            "n_rows": entry.n_rows,
            "n_entities": entry.n_entities,
            "excluded": [{"symbol": s, "reason": r} for s, r in entry.excluded],
            "config": results.config,
        }
        if entry.failure is not None:
            index.append(
                {"spec": entry.spec.value, "horizon": entry.horizon,
                 "window": entry.window, "failure": entry.failure}
            )
            continue
        rel = Path(entry.window) / entry.spec.value / f"h{entry.horizon}"
        if results.mode == "panel":
            cell["fit"] = fit_result_to_dict(entry.fit)
            _write_json(out / rel / "panel.json", cell)
            path = rel / "panel.json"
        else:
            cell["entities"] = {sym: _entity_doc(f) for sym, f in sorted(entry.entity_fits.items())}
            _write_json(out / rel / "individual.json", cell)
            path = rel / "individual.json"
        index.append(
            {"spec": entry.spec.value, "horizon": entry.horizon,
             "window": entry.window, "path": str(path)}
        )
    _write_json(out / "summary.json", {"mode": results.mode, "config": results.config, "cells": index})
    _write_manifest(
        out,
        "fit",
        {
            "measures": str(args.measures), "spec": args.spec, "horizons": args.horizons,
            "mode": args.mode, "window": list(args.window or []),
            "nw_lag": args.nw_lag, "wls_weights": args.wls_weights,
            "weight_floor": args.weight_floor, "target": args.target,
            "fixed_effects": args.fixed_effects, "out": str(args.out),
        },
        {args.measures: _sha256(args.measures)},
    )
    return 0


def _results_from_dir(results_dir: Path):
    """Rebuild StudyResults from a fit output tree."""
    from .regress import FitResult
    import numpy as np
    from .study import StudyEntry, StudyResults

    summary_path = results_dir / "summary.json"
    if not summary_path.exists():
        raise DataError(f"{results_dir} has no summary.json; run `fit` first")
    with open(summary_path, encoding="utf-8") as fh:
        summary = json.load(fh)

    def fit_from_dict(doc) -> FitResult:
        return FitResult(
            labels=tuple(doc["labels"]),
            coefficients=doc["coefficients"],
            covariance=np.asarray(doc["covariance"]),
            std_errors=doc["std_errors"],
            t_stats={k: float(v) if v is not None else float("nan") for k, v in doc["t_stats"].items()},
            p_values={k: float(v) if v is not None else float("nan") for k, v in doc["p_values"].items()},
            n_obs=doc["n_obs"],
            nw_lag=doc["nw_lag"],
            estimator=doc["estimator"],
            converged=doc["converged"],
            condition_number=doc["condition_number"],
            rank=doc["rank"],
            pvalue_dist=doc["pvalue_dist"],
            weights_summary=doc["weights_summary"],
            stage1_condition_number=doc["stage1_condition_number"],
        )

    entries = []
    for cell in summary["cells"]:
        entry = StudyEntry(
            spec=SpecName(cell["spec"]), horizon=cell["horizon"], window=cell["window"]
        )
        if "failure" in cell:
            entry.failure = cell["failure"]
            entries.append(entry)
            continue
        with open(results_dir / cell["path"], encoding="utf-8") as fh:
            doc = json.load(fh)
        entry.n_rows = doc["n_rows"]
        entry.n_entities = doc["n_entities"]
        entry.excluded = [(e["symbol"], e["reason"]) for e in doc["excluded"]]
        if summary["mode"] == "panel":
            entry.fit = fit_from_dict(doc["fit"])
        else:
            entry.entity_fits = {sym: fit_from_dict(d) for sym, d in doc["entities"].items()}
        entries.append(entry)
    return StudyResults(summary["mode"], entries, summary["config"])


def _cmd_report(args) -> int:
    results_dir = Path(args.results)
    results = _results_from_dir(results_dir)

    tables_dir = results_dir / "tables"
    tables_dir.mkdir(parents=True, exist_ok=True)
    table = render_coeff_table(results, args.format)
    table_path = tables_dir / f"coefficients.{args.format}"
    with open(table_path, "w", encoding="utf-8") as fh:
        fh.write(table)

    figures_dir = results_dir / "figures"
    figures_dir.mkdir(parents=True, exist_ok=True)
    for name, doc in render_figure_data(results).items():
        _write_json(figures_dir / name, doc)

    inputs = {results_dir / "summary.json": _sha256(results_dir / "summary.json")}
    options = {"results": str(args.results), "format": args.format}
    _write_manifest(tables_dir, "report", options, inputs)
    _write_manifest(figures_dir, "report", options, inputs)
    return 0


def _cmd_simulate(args) -> int:
    with open(args.config, encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"config {args.config} is not valid JSON: {exc}") from None
    unknown = set(raw) - _SIM_KEYS
    if unknown:
        raise UsageError(
            f"unknown simulate config keys {sorted(unknown)}; valid: {sorted(_SIM_KEYS)}"
        )
    entities = int(raw.pop("entities", 1))
    prefix = raw.pop("symbol_prefix", "SIM")
    if "start" in raw:
        raw["start"] = date.fromisoformat(raw["start"])
    try:
        params = simlab.SimParams(**raw)
    except TypeError as exc:
        raise UsageError(f"bad simulate config: {exc}") from None

    paths = simlab.simulate_panel(params, entities, prefix)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "prices.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("timestamp", "symbol", "price"))
        for series, _ in paths:
            for t, p in zip(series.timestamps, series.prices):
                iso = datetime.fromtimestamp(int(t), tz=timezone.utc).strftime(
                    "%Y-%m-%dT%H:%M:%SZ"
                )
                writer.writerow((iso, series.symbol, repr(float(p))))

    with open(out / "truth.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("symbol", "date", "iv", "jump_sq", "jump_sq_pos", "jump_sq_neg"))
        for series, truth in paths:
            for i, day in enumerate(truth.dates):
                writer.writerow(
                    (series.symbol, day.isoformat(), repr(float(truth.iv[i])),
                     repr(float(truth.jump_sq[i])), repr(float(truth.jump_sq_pos[i])),
                     repr(float(truth.jump_sq_neg[i])))
                )

    _write_manifest(
        out, "simulate",
        {"config": str(args.config), "entities": entities, "symbol_prefix": prefix},
        {args.config: _sha256(args.config)},
    )
    return 0


# ---------------------------------------------------------------------------
# Argument wiring.
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="volharness", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse a raw price CSV into per-symbol series")
    p.add_argument("--input", required=True)
    p.add_argument("--asset-class", required=True, choices=marketdata.ASSET_CLASSES)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("estimate", help="compute daily realized measures")
    p.add_argument("--data", required=True, help="directory written by `ingest`")
    p.add_argument("--grid-minutes", type=int, default=5)
    p.add_argument("--min-coverage", type=float, default=0.8)
    p.add_argument("--bv-skips", type=int, default=4)
    p.add_argument("--bv-scaling", choices=("on", "off"), default="on")
    p.add_argument("--out", required=True, help="measures CSV path")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("fit", help="estimate HAR-family specifications")
    p.add_argument("--measures", required=True)
    p.add_argument("--spec", required=True, help="comma-separated spec names")
    p.add_argument("--horizons", default="1,5,22,66")
    p.add_argument("--mode", choices=("panel", "individual"), default="panel")
    p.add_argument("--window", action="append", metavar="YYYY-MM-DD:YYYY-MM-DD")
    p.add_argument("--nw-lag", type=int, default=None)
    p.add_argument("--wls-weights", choices=("fitted", "abs-residual"), default="fitted")
    p.add_argument("--weight-floor", type=float, default=1e-8)
    p.add_argument("--target", choices=("average", "single", "sum"), default="average")
    p.add_argument("--fixed-effects", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("report", help="render tables and figure data from fit results")
    p.add_argument("--results", required=True)
    p.add_argument("--format", choices=("md", "csv", "json"), default="md")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("simulate", help="generate jump-diffusion price data with truth")
    p.add_argument("--config", required=True, help="JSON parameter file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        _apply_thread_cap()
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except VolharnessError as exc:  # pragma: no cover - base-class safety net
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
