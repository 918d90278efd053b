"""
Continuous-time BK-CUSUM with a prespecified hazard ratio e^theta1.

BK(t) = max over s <= t of theta1 * N(s, t) - (e^theta1 - 1) * Lambda(s, t),
where N counts observed failures and Lambda sums the subjects' cumulative
intensities over (s, t].
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chartcore import Chart, ChartPair
from .choices import ChartKind
from .dataset import Dataset
from .exceptions import DataValidationError
from .riskadjust import cum_intensity_matrix, relative_risks

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BKSpec:
    theta1: float
    model: object
    ctimes: Optional[tuple] = None
    C: Optional[float] = None
    stoptime: Optional[float] = None
    twosided: bool = False

    def __post_init__(self):
        if not math.isfinite(self.theta1) or self.theta1 == 0:
            raise DataValidationError(f"theta1 must be finite and nonzero, got {self.theta1!r}")
        if self.C is not None and not self.C > 0:
            raise DataValidationError(f"C must be positive, got {self.C!r}")
        if getattr(self.model, 'baseline', None) is None:
            raise DataValidationError("BK-CUSUM needs a model with a cumulative baseline hazard")
        if self.ctimes is not None:
            object.__setattr__(self, 'ctimes', tuple(float(t) for t in self.ctimes))


# =============================================================================
# Counting process helpers (shared with the CGR-CUSUM)
# =============================================================================

def observed_failure_times(data: Dataset, C=None):
    """
    Chronological failure time per subject, +inf when no failure counts.

    A failure later than C after entry is outside the truncation window.
    """
    failed = data.censorids == 1
    if C is not None and math.isfinite(C):
        failed &= data.survtimes <= C
    return np.where(failed, data.entrytimes + data.survtimes, np.inf)


def evaluation_grid(failure_times, ctimes=None, stoptime=None):
    """
    Failure times (capped at stoptime, and at the last ctime when ctimes are
    given) merged with the requested ctimes.
    """
    failures = failure_times[np.isfinite(failure_times)]
    if stoptime is not None:
        failures = failures[failures <= stoptime]
    if ctimes is None:
        return np.unique(failures)
    ctimes = np.asarray(ctimes, dtype=float)
    if stoptime is not None:
        ctimes = ctimes[ctimes <= stoptime]
    if ctimes.size:
        failures = failures[failures <= ctimes.max()]
    return np.unique(np.concatenate([failures, ctimes]))


def total_cum_intensity(data: Dataset, model, times, C=None):
    """Lambda(t) = sum_i Lambda_i(t) at each time, summed in subject order."""
    if not len(data):
        return np.zeros(len(times))
    matrix = cum_intensity_matrix(
        model.baseline, data.entrytimes, data.survtimes, relative_risks(model, data), times, C,
    )
    return matrix.sum(axis=0)


# =============================================================================
# Chart
# =============================================================================

def _bk_statistic(grid, failure_times, total_lambda, theta1):
    """
    Upper-style BK values for theta1 of either sign.

    Anchors at failure times follow the clamped recursion; a grid time after
    anchor t_k only adds the continuous drift since t_k.
    """
    drift = math.expm1(theta1)
    sorted_failures = np.sort(failure_times[np.isfinite(failure_times)])
    counts = np.searchsorted(sorted_failures, grid, side='right')

    values = np.empty(len(grid))
    anchor_value = 0.0
    anchor_count = 0
    anchor_lambda = 0.0
    for k, (count, lam) in enumerate(zip(counts.tolist(), total_lambda.tolist())):
        if count > anchor_count:
            anchor_value = max(0.0, anchor_value + theta1 * (count - anchor_count) - drift * (lam - anchor_lambda))
            anchor_count = count
            anchor_lambda = lam
            values[k] = anchor_value
        else:
            values[k] = max(0.0, anchor_value - drift * (lam - anchor_lambda))
    return values


def _one_sided(theta1, grid, failure_times, total_lambda, start_time, h):
    lower = theta1 < 0
    values = _bk_statistic(grid, failure_times, total_lambda, theta1)
    if lower:
        values = -values
    kind = ChartKind.BK_LOWER if lower else ChartKind.BK
    chart = Chart(kind, grid, values + 0.0, start_time=start_time)
    if h is not None:
        chart = chart.truncate(h)
    return chart


def bk_cusum(data: Dataset, spec: BKSpec, h=None):
    """
    Build the BK-CUSUM for one unit.

    Args:
        data: Records of a single unit
        spec: BKSpec; theta1 > 0 gives the upper chart, theta1 < 0 the lower
              chart (values <= 0). twosided returns a ChartPair built with
              +|theta1| and -|theta1|.
        h: Optional early stop. For a two-sided chart either (h_lower, h_upper)
           or a single symmetric value.

    Returns:
        Chart or ChartPair
    """
    if not len(data):
        raise DataValidationError("BK-CUSUM needs at least one subject")

    failure_times = observed_failure_times(data, spec.C)
    grid = evaluation_grid(failure_times, spec.ctimes, spec.stoptime)
    total_lambda = total_cum_intensity(data, spec.model, grid, spec.C)
    start_time = data.min_entrytime
    logger.debug("BK chart: %d subjects, %d grid times", len(data), len(grid))

    if spec.twosided:
        if isinstance(h, (tuple, list)):
            h_lower, h_upper = h
        elif h is not None:
            h_lower, h_upper = -abs(h), abs(h)
        else:
            h_lower = h_upper = None
        magnitude = abs(spec.theta1)
        return ChartPair(
            _one_sided(magnitude, grid, failure_times, total_lambda, start_time, h_upper),
            _one_sided(-magnitude, grid, failure_times, total_lambda, start_time, h_lower),
        )
    return _one_sided(spec.theta1, grid, failure_times, total_lambda, start_time, h)
