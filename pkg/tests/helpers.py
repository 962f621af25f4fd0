"""Shared fixtures-by-hand: synthetic series builders and generation oracles.

The HAR panel generator here is the independent Monte Carlo oracle for the
recovery tests: it produces data directly from the regression recursion
with known coefficients, never touching the estimation code it checks.
"""

from datetime import date, timedelta

import numpy as np

from volharness.estimators import DailyMeasures, MeasureSeries
from volharness.model import RegressionSample, SpecName

HAR_TRUTH = (0.1, 0.4, 0.3, 0.2)  # mu, phi_d, phi_w, phi_m
START = date(2020, 1, 1)


def make_series(
    symbol,
    rv,
    daily_return=None,
    rv_pos=None,
    rv_neg=None,
    bv=None,
    asset_class="crypto",
    n_obs=100,
):
    """MeasureSeries from raw arrays; unspecified columns default to a
    half/half semivariance split (so rv = rv_pos + rv_neg holds) and bv = rv."""
    rv = np.asarray(rv, dtype=float)
    n = rv.size
    daily_return = np.zeros(n) if daily_return is None else np.asarray(daily_return, dtype=float)
    rv_pos = rv / 2.0 if rv_pos is None else np.asarray(rv_pos, dtype=float)
    rv_neg = rv / 2.0 if rv_neg is None else np.asarray(rv_neg, dtype=float)
    bv = rv.copy() if bv is None else np.asarray(bv, dtype=float)
    days = []
    for i in range(n):
        sjv = rv_pos[i] - rv_neg[i]
        days.append(
            DailyMeasures(
                date=START + timedelta(days=i),
                rv=float(rv[i]),
                bv=float(bv[i]),
                rv_pos=float(rv_pos[i]),
                rv_neg=float(rv_neg[i]),
                sjv=float(sjv),
                sjv_pos=float(max(sjv, 0.0)),
                sjv_neg=float(min(sjv, 0.0)),
                daily_return=float(daily_return[i]),
                n_obs=n_obs,
            )
        )
    return MeasureSeries(symbol, asset_class, tuple(days))


def make_sample(y, X, labels, spec=SpecName.HAR_RV, horizon=1, group_starts=None):
    """Bare RegressionSample for direct regress-module tests."""
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    n = y.size
    if group_starts is None:
        group_starts = np.array([0, n], dtype=np.int64)
    return RegressionSample(
        y=y,
        X=X,
        labels=tuple(labels),
        symbols=("SYN",) * n,
        dates=tuple(START + timedelta(days=i) for i in range(n)),
        horizon=horizon,
        spec=spec,
        group_starts=np.asarray(group_starts, dtype=np.int64),
    )


def har_recursion(rng, days, coef=HAR_TRUTH, burn=200, noise=1.0):
    """rv series generated directly from the HAR recursion (the oracle)."""
    mu, phi_d, phi_w, phi_m = coef
    n = days + burn
    rv = np.empty(n)
    rv[:22] = mu / max(1.0 - (phi_d + phi_w + phi_m), 1e-6)
    eps = noise * rng.standard_normal(n)
    for t in range(21, n - 1):
        weekly = rv[t - 4 : t].mean()
        monthly = rv[t - 21 : t - 4].mean()
        rv[t + 1] = mu + phi_d * rv[t] + phi_w * weekly + phi_m * monthly + eps[t + 1]
    return rv[burn:]


def har_panel(master_seed, n_entities=20, days=500, coef=HAR_TRUTH, noise=1.0):
    """Synthetic panel from the HAR recursion; entity streams are
    independent via seed sequences [master_seed, entity_index]."""
    panel = []
    for e in range(n_entities):
        rng = np.random.default_rng([master_seed, e])
        rv = har_recursion(rng, days, coef, noise=noise)
        panel.append(make_series(f"E{e:02d}", rv))
    return panel


def diffusion_measure_series(symbol, seed, days=170, steps=48, lam=0.8):
    """Realistic MeasureSeries via the simulator + estimator pipeline
    (all measure columns non-degenerate)."""
    from volharness.estimators import build_series
    from volharness.simlab import SimParams, measured_day_returns, _simulate_increments

    params = SimParams(
        days=days,
        steps_per_day=steps,
        sigma_pct=1.0,
        jump_intensity=lam,
        jump_std_pct=0.5,
        seed=seed,
    )
    rng = np.random.default_rng(seed)
    inc, truth = _simulate_increments(params, rng)
    returns = measured_day_returns(inc)
    day_map = {truth.dates[i]: returns[i] for i in range(days)}
    series, _ = build_series(symbol, "crypto", day_map)
    return series
