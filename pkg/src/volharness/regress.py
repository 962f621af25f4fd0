"""Least-squares estimation with Newey-West HAC inference.

OLS solves through numpy's SVD-backed lstsq (rank-revealing); the
two-stage WLS refits with inverse-fitted-value weights from a preliminary
OLS pass.  HAC covariances use Bartlett weights and, for stacked panels,
only lag cross-products inside an entity's own time-ordered block.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import kernels
from .errors import NumericalError, UsageError

CONDITION_LIMIT = 1e10
WLS_WEIGHT_MODES = ("fitted", "abs-residual")
PVALUE_DISTS = ("normal", "t")
# Quantile of the positive stage-1 fitted values used to floor weights when
# nonpositive fitted values appear (inverse-fitted weighting is ill-posed
# there); on all-positive data the configured weight_floor applies verbatim.
GUARD_QUANTILE = 0.05


@dataclass(frozen=True)
class FitResult:
    """Coefficients plus HAC inference for one estimated specification."""

    labels: tuple
    coefficients: dict
    covariance: np.ndarray
    std_errors: dict
    t_stats: dict
    p_values: dict
    n_obs: int
    nw_lag: int
    estimator: str  # "OLS" | "WLS"
    converged: bool
    condition_number: float
    rank: int
    pvalue_dist: str
    weights_summary: dict | None = None
    stage1_condition_number: float | None = None

    def coef_vector(self) -> np.ndarray:
        return np.array([self.coefficients[lab] for lab in self.labels])

    def stars(self) -> dict:
        return {lab: significance(self.p_values[lab]) for lab in self.labels}


def default_nw_lag(T: int) -> int:
    """Newey-West plug-in bandwidth floor(4 (T/100)^(2/9))."""
    if T < 2:
        raise UsageError(f"need at least 2 observations, got {T}")
    return int(math.floor(4.0 * (T / 100.0) ** (2.0 / 9.0)))


def significance(p: float) -> str:
    """Star string for a p-value: *** <0.01, ** <0.05, * <0.1."""
    if math.isnan(p):
        return ""
    if not 0.0 <= p <= 1.0:
        raise UsageError(f"p-value must be in [0, 1], got {p}")
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""


def _solve(X, y):
    """Min-norm least squares with rank and conditioning diagnostics."""
    beta, _, rank, sv = np.linalg.lstsq(X, y, rcond=None)
    if sv.size and sv[-1] > 0.0:
        cond = float(sv[0] / sv[-1])
    else:
        cond = float("inf")
    return beta, int(rank), cond


def newey_west(X, residuals, lag: int, group_starts=None) -> np.ndarray:
    """Bartlett-weighted HAC sandwich (X'X)^-1 S (X'X)^-1.

    S sums e_t^2 x_t x_t' plus, for each lag l <= ``lag``, the weighted
    symmetrized cross-products of x_t e_t with its l-step-back neighbor
    inside the same entity block.  ``X`` may be a RegressionSample (its
    entity blocks are used) or a plain design matrix.  Pass weighted rows
    for WLS fits.  Blocks shorter than the bandwidth contribute the lags
    they have; a warning reports the truncation.
    """
    if hasattr(X, "X"):  # RegressionSample
        if group_starts is None:
            group_starts = X.group_starts
        X = X.X
    X = np.ascontiguousarray(X, dtype=np.float64)
    e = np.ascontiguousarray(residuals, dtype=np.float64)
    n, k = X.shape
    if e.shape != (n,):
        raise UsageError("residuals misaligned with design rows")
    if lag < 0:
        raise UsageError(f"lag must be >= 0, got {lag}")
    if group_starts is None:
        group_starts = np.array([0, n], dtype=np.int64)
    else:
        group_starts = np.ascontiguousarray(group_starts, dtype=np.int64)
    min_block = int(np.diff(group_starts).min())
    if lag >= min_block:
        warnings.warn(
            f"Newey-West lag {lag} >= shortest entity block ({min_block} rows); "
            f"truncated to {min_block - 1} inside short blocks",
            stacklevel=2,
        )
    scores = X * e[:, None]
    s_mat = kernels.nw_s_matrix(scores, group_starts, int(lag))
    bread = np.linalg.pinv(X.T @ X)
    cov = bread @ s_mat @ bread
    return (cov + cov.T) / 2.0


def _inference(sample, beta, cov, n, nw_lag, pvalue_dist):
    k = len(sample.labels)
    se = np.sqrt(np.maximum(np.diag(cov), 0.0))
    t_stats = np.full(k, np.nan)
    p_vals = np.full(k, np.nan)
    nz = se > 0.0
    t_stats[nz] = beta[nz] / se[nz]
    if pvalue_dist == "normal":
        p_vals[nz] = 2.0 * stats.norm.sf(np.abs(t_stats[nz]))
    else:
        dof = max(n - k, 1)
        p_vals[nz] = 2.0 * stats.t.sf(np.abs(t_stats[nz]), df=dof)
    labels = sample.labels
    return (
        dict(zip(labels, map(float, beta))),
        dict(zip(labels, map(float, se))),
        dict(zip(labels, map(float, t_stats))),
        dict(zip(labels, map(float, p_vals))),
    )


def ols(sample, nw_lag: int | None = None, pvalue_dist: str = "normal") -> FitResult:
    """Ordinary least squares with Newey-West HAC errors."""
    if pvalue_dist not in PVALUE_DISTS:
        raise UsageError(f"pvalue_dist must be one of {PVALUE_DISTS}")
    n, k = sample.X.shape
    if n < k:
        raise NumericalError(f"underdetermined system: {n} rows < {k} columns")
    beta, rank, cond = _solve(sample.X, sample.y)
    resid = sample.y - sample.X @ beta
    lag = default_nw_lag(n) if nw_lag is None else int(nw_lag)
    cov = newey_west(sample.X, resid, lag, sample.group_starts)
    coefs, se, tstats, pvals = _inference(sample, beta, cov, n, lag, pvalue_dist)
    return FitResult(
        labels=sample.labels,
        coefficients=coefs,
        covariance=cov,
        std_errors=se,
        t_stats=tstats,
        p_values=pvals,
        n_obs=n,
        nw_lag=lag,
        estimator="OLS",
        converged=(rank == k and cond <= CONDITION_LIMIT),
        condition_number=cond,
        rank=rank,
        pvalue_dist=pvalue_dist,
    )


def wls_two_stage(
    sample,
    weight_floor: float = 1e-8,
    weights_mode: str = "fitted",
    nw_lag: int | None = None,
    pvalue_dist: str = "normal",
) -> FitResult:
    """Two-stage WLS: OLS pass, weights 1/max(fitted, floor), weighted refit.

    ``weights_mode='abs-residual'`` keeps the literal inverse-residual
    reading, 1/max(|resid|, floor).  When the weight base has nonpositive
    entries, the floor is raised to the 5th percentile of its positive
    part so no row can take a divergent weight; the engaged guard and the
    floored-row count are reported in ``weights_summary``.
    """
    if weights_mode not in WLS_WEIGHT_MODES:
        raise UsageError(f"weights_mode must be one of {WLS_WEIGHT_MODES}")
    if pvalue_dist not in PVALUE_DISTS:
        raise UsageError(f"pvalue_dist must be one of {PVALUE_DISTS}")
    if weight_floor <= 0.0:
        raise UsageError(f"weight_floor must be positive, got {weight_floor}")
    n, k = sample.X.shape
    if n < k:
        raise NumericalError(f"underdetermined system: {n} rows < {k} columns")

    beta1, rank1, cond1 = _solve(sample.X, sample.y)
    fitted1 = sample.X @ beta1
    base = fitted1 if weights_mode == "fitted" else np.abs(sample.y - fitted1)

    floor_eff = float(weight_floor)
    guard = False
    if np.any(base <= 0.0):
        positive = base[base > 0.0]
        if positive.size:
            floor_eff = max(floor_eff, float(np.quantile(positive, GUARD_QUANTILE)))
        guard = True
    weights = 1.0 / np.maximum(base, floor_eff)
    n_floored = int(np.count_nonzero(base < floor_eff))

    sw = np.sqrt(weights)
    Xw = sample.X * sw[:, None]
    yw = sample.y * sw
    beta2, rank2, cond2 = _solve(Xw, yw)
    resid_w = yw - Xw @ beta2
    lag = default_nw_lag(n) if nw_lag is None else int(nw_lag)
    cov = newey_west(Xw, resid_w, lag, sample.group_starts)
    coefs, se, tstats, pvals = _inference(sample, beta2, cov, n, lag, pvalue_dist)
    return FitResult(
        labels=sample.labels,
        coefficients=coefs,
        covariance=cov,
        std_errors=se,
        t_stats=tstats,
        p_values=pvals,
        n_obs=n,
        nw_lag=lag,
        estimator="WLS",
        converged=(rank1 == k and rank2 == k and cond1 <= CONDITION_LIMIT and cond2 <= CONDITION_LIMIT),
        condition_number=cond2,
        rank=rank2,
        pvalue_dist=pvalue_dist,
        weights_summary={
            "min": float(weights.min()),
            "median": float(np.median(weights)),
            "max": float(weights.max()),
            "floored": n_floored,
            "floor": floor_eff,
            "guard_engaged": guard,
            "mode": weights_mode,
        },
        stage1_condition_number=cond1,
    )
