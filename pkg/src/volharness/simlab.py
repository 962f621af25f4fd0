"""Jump-diffusion log-price simulator with exact per-day ground truth.

Euler steps advance the log price by drift*dt + sigma*sqrt(dt)*z; compound
Poisson jumps land on uniformly chosen steps, after the diffusion
increment.  The truth record (per-day integrated variance and squared jump
sums, plus the full jump log) is exact for the discretization, which makes
the simulator the correctness oracle for every estimator: measured RV must
track IV + jump sum, BV just IV, and the semivariance difference the
signed jump sums.

Everything is reproducible from the seed; panels and Monte Carlo
replications derive entity/path seeds as seed + index.
"""

from dataclasses import dataclass, replace
from datetime import date, timedelta

import numpy as np

from . import kernels
from .errors import UsageError
from .marketdata import PriceSeries

EPOCH = date(1970, 1, 1)


@dataclass(frozen=True)
class SimParams:
    """Per-day percent-unit parameters of the simulated process."""

    days: int
    steps_per_day: int = 288
    drift_pct: float = 0.0  # drift of log price, % per day
    sigma_pct: float = 1.0  # diffusion vol, % per sqrt(day) (low state)
    sigma_high_pct: float | None = None  # enables the two-state schedule
    regime_block_days: int = 0  # block length of the alternation
    jump_intensity: float = 0.0  # expected jumps per day
    jump_mean_pct: float = 0.0
    jump_std_pct: float = 0.0
    seed: int = 0
    start: date = date(2020, 1, 1)
    price0: float = 100.0

    def __post_init__(self):
        if self.days < 1:
            raise UsageError("days must be >= 1")
        if self.steps_per_day < 2:
            raise UsageError("steps_per_day must be >= 2")
        if 86400 % self.steps_per_day != 0:
            raise UsageError("steps_per_day must divide 86400 seconds")
        if self.sigma_pct < 0 or (self.sigma_high_pct or 0.0) < 0:
            raise UsageError("diffusion volatility must be >= 0")
        if self.jump_intensity < 0:
            raise UsageError("jump intensity must be >= 0")
        if self.jump_std_pct < 0:
            raise UsageError("jump std must be >= 0")
        if self.sigma_high_pct is not None and self.regime_block_days < 1:
            raise UsageError("two-state schedule needs regime_block_days >= 1")
        if self.price0 <= 0:
            raise UsageError("price0 must be positive")

    def day_sigmas(self) -> np.ndarray:
        """Per-day diffusion vol in percent, after the regime schedule."""
        if self.sigma_high_pct is None:
            return np.full(self.days, self.sigma_pct)
        state = (np.arange(self.days) // self.regime_block_days) % 2
        return np.where(state == 0, self.sigma_pct, self.sigma_high_pct)


@dataclass(frozen=True)
class SimTruth:
    """Exact per-day ground truth for one simulated path (all in %^2)."""

    dates: tuple
    iv: np.ndarray  # integrated variance per day
    jump_sq: np.ndarray  # sum of squared jumps per day
    jump_sq_pos: np.ndarray  # ... from positive jumps only
    jump_sq_neg: np.ndarray  # ... from negative jumps only (magnitude)
    jumps: tuple  # (day_index, step_index, size_pct) log entries


def _simulate_increments(params: SimParams, rng) -> tuple[np.ndarray, SimTruth]:
    """Log-price increments, shape (days, steps), plus the truth record."""
    d, n = params.days, params.steps_per_day
    sig = params.day_sigmas() / 100.0
    dt = 1.0 / n
    inc = params.drift_pct / 100.0 * dt + sig[:, None] * np.sqrt(dt) * rng.standard_normal((d, n))

    jump_sq = np.zeros(d)
    jump_pos = np.zeros(d)
    jump_neg = np.zeros(d)
    jump_log = []
    if params.jump_intensity > 0.0:
        counts = rng.poisson(params.jump_intensity, d)
        for day in range(d):
            for _ in range(counts[day]):
                step = int(rng.integers(0, n))
                size_pct = float(rng.normal(params.jump_mean_pct, params.jump_std_pct))
                inc[day, step] += size_pct / 100.0
                sq = size_pct * size_pct
                jump_sq[day] += sq
                if size_pct > 0.0:
                    jump_pos[day] += sq
                elif size_pct < 0.0:
                    jump_neg[day] += sq
                jump_log.append((day, step, size_pct))

    dates = tuple(params.start + timedelta(days=i) for i in range(d))
    truth = SimTruth(
        dates=dates,
        iv=(params.day_sigmas() ** 2),
        jump_sq=jump_sq,
        jump_sq_pos=jump_pos,
        jump_sq_neg=jump_neg,
        jumps=tuple(jump_log),
    )
    return inc, truth


def simulate_path(params: SimParams, symbol: str = "SIM") -> tuple[PriceSeries, SimTruth]:
    """Generate one path as a 5-minute-style PriceSeries plus its truth."""
    rng = np.random.default_rng(params.seed)
    inc, truth = _simulate_increments(params, rng)
    logp = np.concatenate(([0.0], np.cumsum(inc.ravel()))) + np.log(params.price0)
    step_seconds = 86400 // params.steps_per_day
    t0 = (params.start - EPOCH).days * 86400
    ts = t0 + np.arange(logp.size, dtype=np.int64) * step_seconds
    series = PriceSeries(symbol, "crypto", ts, np.exp(logp))
    return series, truth


def simulate_panel(params: SimParams, n_entities: int, prefix: str = "SIM") -> list:
    """Independent entities with seeds derived as params.seed + index."""
    if n_entities < 1:
        raise UsageError("n_entities must be >= 1")
    width = max(2, len(str(n_entities - 1)))
    out = []
    for i in range(n_entities):
        sym = f"{prefix}{i:0{width}d}"
        out.append(simulate_path(replace(params, seed=params.seed + i), symbol=sym))
    return out


def measured_day_returns(inc: np.ndarray) -> np.ndarray:
    """Percent returns an ingested day would yield: all but the day's last step.

    The increment from a day's final grid slot into the next midnight is an
    overnight return and never enters the intraday vector.
    """
    return 100.0 * inc[:, :-1]


@dataclass(frozen=True)
class ConvergenceReport:
    """Monte Carlo mean and standard error of estimator-vs-truth gaps."""

    n_paths: int
    n_days: int
    rv_vs_qv: tuple  # mean, se of RV - (IV + jump sum)
    bv_vs_iv: tuple  # mean, se of BV - IV
    sjv_vs_jumps: tuple  # mean, se of (RV+ - RV-) - (jump+ - jump-)
    mean_rv: float
    mean_bv: float


def _mean_se(x: np.ndarray) -> tuple:
    se = x.std(ddof=1) / np.sqrt(x.size) if x.size > 1 else 0.0
    return float(x.mean()), float(se)


def convergence_report(
    params: SimParams, n_paths: int, bv_skips: int = 4, bv_scaling: bool = True
) -> ConvergenceReport:
    """Simulate ``n_paths`` independent paths and compare estimators to truth."""
    if n_paths < 1:
        raise UsageError("n_paths must be >= 1")
    rv_gap, bv_gap, sjv_gap, rv_all, bv_all = [], [], [], [], []
    n_ret = params.steps_per_day - 1
    offsets = np.arange(params.days + 1, dtype=np.int64) * n_ret
    for i in range(n_paths):
        rng = np.random.default_rng(params.seed + i)
        inc, truth = _simulate_increments(params, rng)
        flat = np.ascontiguousarray(measured_day_returns(inc).ravel())
        rv, bv, rv_pos, rv_neg, _, _ = kernels.batch_day_measures(
            flat, offsets, bv_skips, bv_scaling
        )
        rv_gap.append(rv - (truth.iv + truth.jump_sq))
        bv_gap.append(bv - truth.iv)
        sjv_gap.append((rv_pos - rv_neg) - (truth.jump_sq_pos - truth.jump_sq_neg))
        rv_all.append(rv)
        bv_all.append(bv)
    rv_gap = np.concatenate(rv_gap)
    return ConvergenceReport(
        n_paths=n_paths,
        n_days=int(rv_gap.size),
        rv_vs_qv=_mean_se(rv_gap),
        bv_vs_iv=_mean_se(np.concatenate(bv_gap)),
        sjv_vs_jumps=_mean_se(np.concatenate(sjv_gap)),
        mean_rv=float(np.concatenate(rv_all).mean()),
        mean_bv=float(np.concatenate(bv_all).mean()),
    )
