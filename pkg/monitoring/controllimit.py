"""
Control limits by simulation.

In-control units are simulated from the risk model (Poisson arrivals,
covariates resampled from the baseline data); h is the smallest value on a
significant-digit grid such that at most a fraction alpha of the simulated
charts reach it within the monitoring horizon.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from decimal import ROUND_FLOOR, Decimal
from typing import Optional

import numpy as np
from scipy.special import expit

from .bernoulli import BernoulliSpec, bernoulli_cusum
from .bkcusum import BKSpec, bk_cusum
from .cgrcusum import DEFAULT_MAXTHETA, CGRSpec, cgr_cusum
from .chartcore import chart_max
from .choices import LimitKind
from .dataset import DEFAULT_UNIT, Dataset, PatientRecord
from .datagen import poisson_arrivals
from .exceptions import CalibrationError, DataValidationError
from .riskadjust import CoxModel
from .workers import ordered_map, resolve_workers, unit_rng

logger = logging.getLogger(__name__)

DEFAULT_N_SIM = {
    LimitKind.BERNOULLI: 200,
    LimitKind.BK: 200,
    LimitKind.CGR: 20,
}
DEFAULT_ALPHA = 0.05
DEFAULT_THETA = math.log(2)


@dataclass(frozen=True)
class SimConfig:
    time: float
    psi: float
    model: Optional[object] = None
    baseline_data: Optional[Dataset] = None
    alpha: float = DEFAULT_ALPHA
    n_sim: Optional[int] = None
    h_precision: int = 2
    seed: int = 0
    theta: Optional[float] = DEFAULT_THETA
    followup: Optional[float] = None
    p0: Optional[float] = None
    p1: Optional[float] = None
    maxtheta: float = DEFAULT_MAXTHETA

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise DataValidationError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not self.psi > 0:
            raise DataValidationError(f"psi must be positive, got {self.psi!r}")
        if not self.time > 0:
            raise DataValidationError(f"time must be positive, got {self.time!r}")
        if self.n_sim is not None and int(self.n_sim) < 1:
            raise DataValidationError(f"n_sim must be >= 1, got {self.n_sim!r}")
        if int(self.h_precision) < 1:
            raise DataValidationError(f"h_precision must be >= 1, got {self.h_precision!r}")

    def n_sim_for(self, kind):
        return int(self.n_sim) if self.n_sim is not None else DEFAULT_N_SIM[LimitKind(kind)]

    @property
    def covariate_names(self):
        return tuple(self.model.coefficients) if self.model is not None else ()


@dataclass(frozen=True)
class ControlLimitResult:
    kind: str
    h: float
    maxima: tuple
    alpha: float
    achieved_alpha: float
    n_sim: int
    seed: int
    lower: bool = False
    config: dict = field(default_factory=dict)


# =============================================================================
# Significant-digit grid
# =============================================================================

def _grid_step(value, digits):
    exact = Decimal(repr(float(value)))
    return exact, Decimal(1).scaleb(exact.adjusted() - digits + 1)


def grid_ceiling(value, digits=2):
    """Smallest number with ``digits`` significant digits strictly greater than value > 0."""
    exact, step = _grid_step(value, digits)
    multiple = (exact / step).to_integral_value(rounding=ROUND_FLOOR)
    return float((multiple + 1) * step)


def grid_floor(value, digits=2):
    """Largest number with ``digits`` significant digits not exceeding value > 0."""
    exact, step = _grid_step(value, digits)
    return float((exact / step).to_integral_value(rounding=ROUND_FLOOR) * step)


def limit_from_maxima(maxima, alpha, digits=2):
    """
    Apply the type-I error rule to nonnegative chart maxima.

    Returns:
        h such that fraction(maxima >= h) <= alpha while the next smaller
        grid value would exceed alpha.
    """
    values = np.sort(np.asarray(maxima, dtype=float))[::-1]
    n = len(values)
    if n == 0 or values[0] <= 0:
        raise CalibrationError("insufficient events to calibrate: every simulated chart stayed at 0")
    allowed = int(math.floor(alpha * n + 1e-9))
    if allowed >= n:
        raise CalibrationError(f"alpha={alpha} allows every one of {n} simulated units to signal")
    threshold = values[allowed]
    if threshold > 0:
        return grid_ceiling(threshold, digits)
    # Fewer positive maxima than allowed signals: any positive h below them works
    return grid_floor(values[values > 0].min(), digits)


# =============================================================================
# Simulation
# =============================================================================

def _requires(kind, config):
    kind = LimitKind(kind)
    if kind == LimitKind.BERNOULLI:
        if config.followup is None:
            raise DataValidationError("Bernoulli control limits need a followup window")
        if config.model is not None:
            if isinstance(config.model, CoxModel) or config.model.intercept is None:
                raise DataValidationError("Bernoulli control limits need a logistic model")
        elif config.p0 is None:
            raise DataValidationError("Bernoulli control limits need a logistic model or p0")
    else:
        if config.model is None or config.model.baseline is None:
            raise DataValidationError(f"{kind.label} control limits need a model with a baseline hazard")
        if kind == LimitKind.BK and not config.theta:
            raise DataValidationError("BK control limits need a nonzero theta")
    if config.model is not None and config.model.coefficients:
        if config.baseline_data is None or not len(config.baseline_data):
            raise DataValidationError("Covariate resampling needs nonempty baseline data")
    return kind


def simulate_inctrl_unit(config: SimConfig, index, kind=LimitKind.BK):
    """
    Draw one in-control unit, deterministic in (config.seed, index).

    Survival kinds draw X = H0^-1(E / exp(Z beta)) with E ~ Exp(1); subjects
    whose draw lies beyond the last baseline step are censored at the
    horizon. The Bernoulli kind places each outcome at entry + followup.
    """
    kind = _requires(kind, config)
    rng = unit_rng(config.seed, index)
    entries = poisson_arrivals(rng, config.psi, config.time)
    n = len(entries)

    names = config.covariate_names
    if names:
        pool = config.baseline_data.covariate_matrix(names)
        Z = pool[rng.integers(0, len(pool), size=n)]
    else:
        Z = np.zeros((n, 0))
    covariates = [dict(zip(names, row.tolist())) for row in Z]
    lp = Z @ np.array([config.model.coefficients[k] for k in names]) if names else np.zeros(n)

    if kind == LimitKind.BERNOULLI:
        if config.model is not None:
            probs = expit(config.model.intercept + lp)
        else:
            probs = np.full(n, config.p0)
        failed = rng.random(n) < probs
        survtimes = np.full(n, float(config.followup))
        censorids = failed.astype(int)
    else:
        draws = config.model.baseline.inverse(rng.standard_exponential(n) / np.exp(lp))
        finite = np.isfinite(draws)
        survtimes = np.where(finite, draws, config.time - entries)
        censorids = finite.astype(int)

    records = tuple(
        PatientRecord(float(s), float(x), int(d), DEFAULT_UNIT, z)
        for s, x, d, z in zip(entries, survtimes, censorids, covariates)
    )
    return Dataset(records, names)


def _build_chart(kind, config, unit):
    if kind == LimitKind.BERNOULLI:
        if config.model is not None:
            spec = BernoulliSpec(theta=config.theta, followup=config.followup, model=config.model)
        elif config.p1 is not None:
            spec = BernoulliSpec(p0=config.p0, p1=config.p1, followup=config.followup)
        else:
            spec = BernoulliSpec(theta=config.theta, p0=config.p0, followup=config.followup)
        return bernoulli_cusum(unit, spec, stoptime=config.time)
    if kind == LimitKind.BK:
        return bk_cusum(unit, BKSpec(config.theta, config.model, stoptime=config.time))
    return cgr_cusum(unit, CGRSpec(config.model, maxtheta=config.maxtheta, stoptime=config.time))


def simulated_maximum(task):
    """Chart extreme of one simulated unit; module level so process pools can pickle it."""
    kind, config, index = task
    unit = simulate_inctrl_unit(config, index, kind)
    if not len(unit):
        return 0.0
    return chart_max(_build_chart(kind, config, unit))


def is_lower(kind, config):
    kind = LimitKind(kind)
    if kind == LimitKind.BK:
        return config.theta < 0
    if kind == LimitKind.BERNOULLI:
        if config.p1 is not None:
            return config.p1 < config.p0
        return config.theta < 0
    return False


def simulate_maxima(kind, config: SimConfig, n_units, workers=None, progress=None):
    """Chart extremes of units 0..n_units-1, in unit order."""
    kind = _requires(kind, config)
    tasks = [(kind, config, index) for index in range(n_units)]
    workers = resolve_workers(workers)
    return ordered_map(simulated_maximum, tasks, workers, processes=workers > 1, progress=progress)


def control_limit(kind, config: SimConfig, workers=None, progress=None):
    """
    Calibrate h for a chart kind.

    Args:
        kind: LimitKind (bernoulli, bk, cgr)
        config: SimConfig
        workers: Process count (default: available parallelism)
        progress: Optional callback(done, total)

    Returns:
        ControlLimitResult; h is negative for lower-sided charts.

    Raises:
        CalibrationError: no simulated chart ever left 0
    """
    kind = _requires(kind, config)
    n_sim = config.n_sim_for(kind)
    lower = is_lower(kind, config)
    maxima = simulate_maxima(kind, config, n_sim, workers, progress)

    magnitudes = [-m for m in maxima] if lower else maxima
    h = limit_from_maxima(magnitudes, config.alpha, config.h_precision)
    achieved = sum(1 for m in magnitudes if m >= h) / n_sim
    if lower:
        h = -h

    logger.info(
        "Control limit %s: h=%s from %d units (alpha=%s, achieved %.4f)",
        kind, h, n_sim, config.alpha, achieved,
    )
    return ControlLimitResult(
        kind=kind.value,
        h=h,
        maxima=tuple(float(m) for m in maxima),
        alpha=config.alpha,
        achieved_alpha=achieved,
        n_sim=n_sim,
        seed=config.seed,
        lower=lower,
        config={
            'time': config.time, 'psi': config.psi, 'h_precision': config.h_precision,
            'theta': config.theta, 'followup': config.followup, 'p0': config.p0,
            'p1': config.p1, 'maxtheta': config.maxtheta,
        },
    )


def in_control_signal_fraction(kind, config: SimConfig, h, n_units, seed, workers=None, progress=None):
    """Fraction of a fresh batch of in-control units whose chart reaches h within the horizon."""
    fresh = replace(config, seed=seed)
    maxima = simulate_maxima(kind, fresh, n_units, workers, progress)
    if h < 0:
        hits = sum(1 for m in maxima if m <= h)
    else:
        hits = sum(1 for m in maxima if m >= h)
    return hits / n_units
