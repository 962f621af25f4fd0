"""Panel, individual, and window estimations plus table/figure rendering.

A study runs every requested (window, spec, horizon) cell: windows filter
days by date before design construction (so burn-in re-applies inside the
window), per-entity designs are stacked for pooled panel fits with a
single common intercept, and individual mode fits each entity alone,
excluding entities whose fit is rank-deficient/ill-conditioned or whose
sample is shorter than 5 rows per parameter.  Failed cells are recorded
with a reason; a study where every cell fails raises.
"""

import csv
import io
import json
from dataclasses import dataclass, field, replace
from datetime import date

import numpy as np

from .errors import DataError, UsageError
from .model import BURN_IN, SpecName, TARGET_CONVENTIONS, build_design, get_spec, stack_samples
from .regress import WLS_WEIGHT_MODES, significance, wls_two_stage
from .estimators import MeasureSeries

DEFAULT_HORIZONS = (1, 5, 22, 66)
MIN_ROWS_PER_PARAM = 5  # individual-fit inclusion needs >= 5k rows
INDIVIDUAL_SIGNIFICANCE = 0.05


@dataclass(frozen=True)
class Window:
    """Inclusive date window; both ends open means the full sample."""

    start: date | None = None
    end: date | None = None

    def __post_init__(self):
        if self.start is not None and self.end is not None and self.start > self.end:
            raise UsageError(f"degenerate window {self.start}..{self.end}")

    @property
    def label(self) -> str:
        if self.start is None and self.end is None:
            return "full"
        if (
            self.start is not None
            and self.end is not None
            and (self.start.month, self.start.day) == (1, 1)
            and (self.end.month, self.end.day) == (12, 31)
        ):
            return f"{self.start.year}-{self.end.year}"
        lo = self.start.isoformat() if self.start else "open"
        hi = self.end.isoformat() if self.end else "open"
        return f"{lo}_{hi}"

    def contains(self, day: date) -> bool:
        if self.start is not None and day < self.start:
            return False
        return self.end is None or day <= self.end


FULL_WINDOW = Window()


@dataclass(frozen=True)
class StudyConfig:
    specs: tuple
    horizons: tuple = DEFAULT_HORIZONS
    windows: tuple = (FULL_WINDOW,)
    mode: str = "panel"
    nw_lag: int | None = None
    wls_weights: str = "fitted"
    weight_floor: float = 1e-8
    target: str = "average"
    fixed_effects: bool = False

    def __post_init__(self):
        object.__setattr__(self, "specs", tuple(get_spec(s).name for s in self.specs))
        if not self.specs:
            raise UsageError("no specs requested")
        if not self.horizons or any(h < 1 for h in self.horizons):
            raise UsageError("horizons must be a nonempty set of integers >= 1")
        if not self.windows:
            raise UsageError("no windows requested")
        if self.mode not in ("panel", "individual"):
            raise UsageError(f"mode must be panel or individual, got {self.mode!r}")
        if self.wls_weights not in WLS_WEIGHT_MODES:
            raise UsageError(f"wls_weights must be one of {WLS_WEIGHT_MODES}")
        if self.target not in TARGET_CONVENTIONS:
            raise UsageError(f"target must be one of {TARGET_CONVENTIONS}")

    def echo(self) -> dict:
        return {
            "specs": [s.value for s in self.specs],
            "horizons": list(self.horizons),
            "windows": [w.label for w in self.windows],
            "mode": self.mode,
            "nw_lag": self.nw_lag,
            "wls_weights": self.wls_weights,
            "weight_floor": self.weight_floor,
            "target": self.target,
            "fixed_effects": self.fixed_effects,
        }


@dataclass
class StudyEntry:
    spec: SpecName
    horizon: int
    window: str
    fit: object = None  # FitResult for panel cells
    entity_fits: dict = field(default_factory=dict)  # individual cells
    excluded: list = field(default_factory=list)  # (symbol, reason)
    failure: str | None = None
    n_rows: int = 0
    n_entities: int = 0


@dataclass
class StudyResults:
    mode: str
    entries: list
    config: dict

    def entry(self, spec, horizon: int, window: str = "full") -> StudyEntry:
        name = get_spec(spec).name
        for e in self.entries:
            if e.spec == name and e.horizon == horizon and e.window == window:
                return e
        raise UsageError(f"no study cell ({name.value}, h={horizon}, {window})")


def _check_one_class(panel) -> None:
    classes = {s.asset_class for s in panel if s.asset_class is not None}
    if len(classes) > 1:
        raise UsageError(f"panel mixes asset classes {sorted(classes)}")


def _window_series(series: MeasureSeries, window: Window):
    days = tuple(d for d in series.days if window.contains(d.date))
    if not days:
        return None
    return MeasureSeries(series.symbol, series.asset_class, days)


def _with_fixed_effects(sample, symbols_order):
    """Append 0/1 entity columns for every entity after the first."""
    extra = symbols_order[1:]
    if not extra:
        return sample
    from .model import RegressionSample

    cols = np.zeros((sample.n_obs, len(extra)))
    sym_arr = np.array(sample.symbols, dtype=object)
    for j, sym in enumerate(extra):
        cols[:, j] = sym_arr == sym
    return RegressionSample(
        y=sample.y,
        X=np.hstack([sample.X, cols]),
        labels=sample.labels + tuple(f"fe_{s}" for s in extra),
        symbols=sample.symbols,
        dates=sample.dates,
        horizon=sample.horizon,
        spec=sample.spec,
        group_starts=sample.group_starts,
    )


def run_study(panel, config: StudyConfig) -> StudyResults:
    """Run every requested (window, spec, horizon) cell in config order."""
    panel = sorted(panel, key=lambda s: s.symbol)
    if not panel:
        raise DataError("empty panel")
    _check_one_class(panel)

    entries = []
    for window in config.windows:
        filtered = [(s.symbol, _window_series(s, window)) for s in panel]
        for spec in config.specs:
            for h in config.horizons:
                if config.mode == "panel":
                    entries.append(_panel_cell(filtered, spec, h, window, config))
                else:
                    entries.append(_individual_cell(filtered, spec, h, window, config))
    if all(e.failure is not None for e in entries):
        reasons = "; ".join(sorted({e.failure for e in entries}))
        raise DataError(f"empty study: every requested cell failed ({reasons})")
    return StudyResults(config.mode, entries, config.echo())


def _panel_cell(filtered, spec, h, window, config) -> StudyEntry:
    entry = StudyEntry(spec=spec, horizon=h, window=window.label)
    samples = []
    for symbol, series in filtered:
        if series is None:
            entry.excluded.append((symbol, "no days in window"))
            continue
        if len(series) < BURN_IN + h + 1:
            entry.excluded.append(
                (symbol, f"series too short ({len(series)} < {BURN_IN + h + 1} days)")
            )
            continue
        samples.append(build_design(series, spec, h, config.target))
    if not samples:
        entry.failure = "no usable rows in window"
        return entry
    sample = stack_samples(samples)
    if config.fixed_effects:
        sample = _with_fixed_effects(sample, [s.symbols[0] for s in samples])
    entry.n_rows = sample.n_obs
    entry.n_entities = len(samples)
    entry.fit = wls_two_stage(
        sample,
        weight_floor=config.weight_floor,
        weights_mode=config.wls_weights,
        nw_lag=config.nw_lag,
        pvalue_dist="normal",
    )
    return entry


def _individual_cell(filtered, spec, h, window, config) -> StudyEntry:
    entry = StudyEntry(spec=spec, horizon=h, window=window.label)
    k = len(get_spec(spec).labels)
    min_rows = MIN_ROWS_PER_PARAM * k
    for symbol, series in filtered:
        if series is None:
            entry.excluded.append((symbol, "no days in window"))
            continue
        try:
            sample = build_design(series, spec, h, config.target)
        except DataError as exc:
            entry.excluded.append((symbol, str(exc)))
            continue
        if sample.n_obs < min_rows:
            entry.excluded.append(
                (symbol, f"insufficient rows: {sample.n_obs} < {min_rows} (5 x {k} params)")
            )
            continue
        fit = wls_two_stage(
            sample,
            weight_floor=config.weight_floor,
            weights_mode=config.wls_weights,
            nw_lag=config.nw_lag,
            pvalue_dist="t",
        )
        if not fit.converged:
            entry.excluded.append(
                (symbol, f"did not converge (rank {fit.rank}/{k}, cond {fit.condition_number:.3g})")
            )
            continue
        entry.entity_fits[symbol] = fit
        entry.n_rows += fit.n_obs
    entry.n_entities = len(entry.entity_fits)
    if not entry.entity_fits:
        entry.failure = "all entities excluded"
    return entry


def fit_panel(panel, config: StudyConfig) -> StudyResults:
    """Pooled fits (common coefficients, single intercept) per cell."""
    if config.mode != "panel":
        config = replace(config, mode="panel")
    return run_study(panel, config)


def fit_individual(panel, config: StudyConfig) -> StudyResults:
    """Independent per-entity fits with convergence/row-count exclusions."""
    if config.mode != "individual":
        config = replace(config, mode="individual")
    return run_study(panel, config)


def window_study(panel, config: StudyConfig) -> StudyResults:
    """Re-estimate the configured cells inside each date window."""
    return run_study(panel, config)


# ---------------------------------------------------------------------------
# Rendering.
# ---------------------------------------------------------------------------


def fit_result_to_dict(fit) -> dict:
    return {
        "labels": list(fit.labels),
        "covariance": [[float(v) for v in row] for row in fit.covariance],
        "coefficients": fit.coefficients,
        "std_errors": fit.std_errors,
        "t_stats": fit.t_stats,
        "p_values": fit.p_values,
        "stars": fit.stars(),
        "n_obs": fit.n_obs,
        "nw_lag": fit.nw_lag,
        "estimator": fit.estimator,
        "converged": fit.converged,
        "condition_number": fit.condition_number,
        "stage1_condition_number": fit.stage1_condition_number,
        "rank": fit.rank,
        "pvalue_dist": fit.pvalue_dist,
        "weights_summary": fit.weights_summary,
    }


def _flat_rows(results: StudyResults):
    """One row per coefficient: the flat table/JSON form."""
    for e in results.entries:
        if e.failure is not None:
            continue
        if results.mode == "panel":
            fits = [(None, e.fit)]
        else:
            fits = sorted(e.entity_fits.items())
        for symbol, fit in fits:
            for lab in fit.labels:
                row = {
                    "spec": e.spec.value,
                    "horizon": e.horizon,
                    "window": e.window,
                    "coef": lab,
                    "value": fit.coefficients[lab],
                    "tstat": fit.t_stats[lab],
                    "pvalue": fit.p_values[lab],
                    "stars": significance(fit.p_values[lab]),
                    "nobs": fit.n_obs,
                }
                if symbol is not None:
                    row["symbol"] = symbol
                yield row


def _md_table(results: StudyResults) -> str:
    all_labels = []
    for e in results.entries:
        if e.failure is not None:
            continue
        labels = e.fit.labels if results.mode == "panel" else next(iter(e.entity_fits.values())).labels
        for lab in labels:
            if lab not in all_labels:
                all_labels.append(lab)
    lines = []
    for window in dict.fromkeys(e.window for e in results.entries):
        lines.append(f"## window {window}")
        lines.append("")
        head = ["spec", "h"] + (["symbol"] if results.mode == "individual" else []) + all_labels
        lines.append("| " + " | ".join(head) + " |")
        lines.append("|" + "---|" * len(head))
        for e in results.entries:
            if e.window != window:
                continue
            if e.failure is not None:
                cells = [e.spec.value, str(e.horizon)] + (
                    ["-"] if results.mode == "individual" else []
                )
                cells += [f"failed: {e.failure}"] + ["-"] * (len(all_labels) - 1)
                lines.append("| " + " | ".join(cells) + " |")
                continue
            fits = [(None, e.fit)] if results.mode == "panel" else sorted(e.entity_fits.items())
            for symbol, fit in fits:
                ident = [e.spec.value, str(e.horizon)] + ([symbol] if symbol is not None else [])
                vals, tstats = [], []
                for lab in all_labels:
                    if lab in fit.coefficients:
                        vals.append(f"{fit.coefficients[lab]:.4g}{significance(fit.p_values[lab])}")
                        t = fit.t_stats[lab]
                        tstats.append("-" if np.isnan(t) else f"({t:.3g})")
                    else:
                        vals.append("-")
                        tstats.append("-")
                lines.append("| " + " | ".join(ident + vals) + " |")
                lines.append("| " + " | ".join([""] * len(ident) + tstats) + " |")
        lines.append("")
    lines.append("*** p<0.01, ** p<0.05, * p<0.1; t-stats in parentheses.")
    lines.append("")
    return "\n".join(lines)


def render_coeff_table(results: StudyResults, fmt: str = "md") -> str:
    """Coefficient tables: two-row markdown blocks or flat csv/json rows."""
    if fmt == "md":
        return _md_table(results)
    rows = list(_flat_rows(results))
    if fmt == "json":
        return json.dumps({"config": results.config, "rows": rows}, indent=2) + "\n"
    if fmt == "csv":
        header = ["spec", "horizon", "window", "coef", "value", "tstat", "pvalue", "stars", "nobs"]
        if results.mode == "individual":
            header.append("symbol")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(row[h]) if isinstance(row[h], float) else row[h] for h in header])
        return buf.getvalue()
    raise UsageError(f"format must be md, csv or json, got {fmt!r}")


def render_figure_data(results: StudyResults) -> dict:
    """Figure-ready JSON documents, keyed by output filename.

    Panel studies yield per-(spec, horizon) grouped bars across windows;
    individual studies yield per-(spec, coefficient, horizon, window)
    entity bars sorted by |coefficient|, flagged at the 5% level.
    """
    docs = {}
    if results.mode == "panel":
        cells = {}
        for e in results.entries:
            if e.failure is None:
                cells.setdefault((e.spec, e.horizon), []).append(e)
        for (spec, h), entries in cells.items():
            bars = {}
            for lab in entries[0].fit.labels:
                bars[lab] = {
                    e.window: e.fit.coefficients[lab] for e in entries if lab in e.fit.coefficients
                }
            docs[f"windows_{spec.value}_h{h}.json"] = {
                "spec": spec.value,
                "horizon": h,
                "bars": bars,
                "config": results.config,
            }
        return docs

    for e in results.entries:
        if e.failure is not None:
            continue
        labels = next(iter(e.entity_fits.values())).labels
        for lab in labels:
            if lab == "intercept":
                continue
            ranked = sorted(
                e.entity_fits.items(),
                key=lambda kv: (-abs(kv[1].coefficients[lab]), kv[0]),
            )
            docs[f"individual_{e.spec.value}_{lab}_h{e.horizon}_{e.window}.json"] = {
                "spec": e.spec.value,
                "horizon": e.horizon,
                "window": e.window,
                "coefficient": lab,
                "entities": [
                    {
                        "symbol": sym,
                        "value": fit.coefficients[lab],
                        "tstat": fit.t_stats[lab],
                        "significant": bool(fit.p_values[lab] < INDIVIDUAL_SIGNIFICANCE),
                    }
                    for sym, fit in ranked
                ],
                "config": results.config,
            }
    return docs
