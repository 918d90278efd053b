"""
CGR-CUSUM: continuous-time generalized likelihood ratio chart.

For every grid time t the chart maximizes, over the change subject nu,
theta_hat * N_{>=nu}(t) - (e^theta_hat - 1) * Lambda_{>=nu}(t), where
theta_hat is the capped maximum likelihood estimate of the log hazard ratio
of all subjects entering from nu onwards.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .bkcusum import evaluation_grid, observed_failure_times
from .chartcore import Chart
from .choices import CGRMethod, ChartKind
from .dataset import Dataset
from .exceptions import DataValidationError
from .riskadjust import cum_intensity_matrix, relative_risks
from .workers import chunk_bounds, ordered_map

logger = logging.getLogger(__name__)

DEFAULT_MAXTHETA = 6.0


@dataclass(frozen=True)
class CGRSpec:
    model: object
    ctimes: Optional[tuple] = None
    maxtheta: float = DEFAULT_MAXTHETA
    C: Optional[float] = None
    stoptime: Optional[float] = None
    method: str = CGRMethod.MATRIX

    def __post_init__(self):
        if not self.maxtheta > 1:
            raise DataValidationError(f"maxtheta must exceed 1, got {self.maxtheta!r}")
        if self.C is not None and not self.C > 0:
            raise DataValidationError(f"C must be positive, got {self.C!r}")
        if getattr(self.model, 'baseline', None) is None:
            raise DataValidationError("CGR-CUSUM needs a model with a cumulative baseline hazard")
        if self.method not in CGRMethod.values:
            raise DataValidationError(f"Unknown CGR method {self.method!r}")
        object.__setattr__(self, 'method', CGRMethod(self.method))
        if self.ctimes is not None:
            object.__setattr__(self, 'ctimes', tuple(float(t) for t in self.ctimes))


@dataclass(frozen=True)
class IntensityMatrix:
    """Lambda_i(t_k) and N_i(t_k) for subjects in entry order (rows) and grid times (columns)."""
    subjects: Dataset
    times: np.ndarray
    intensity: np.ndarray
    failures: np.ndarray


# =============================================================================
# Estimation
# =============================================================================

def cgr_mles(N, Lambda, maxtheta):
    """Vectorised capped MLE min(ln maxtheta, max(0, ln(N / Lambda)))."""
    N = np.asarray(N, dtype=float)
    Lambda = np.asarray(Lambda, dtype=float)
    cap = math.log(maxtheta)
    with np.errstate(divide='ignore', invalid='ignore'):
        uncapped = np.log(N / Lambda)
    theta = np.minimum(cap, np.maximum(0.0, uncapped))
    # Failures with no accumulated intensity take the cap
    theta = np.where(Lambda <= 0, cap, theta)
    return np.where(N <= 0, 0.0, theta)


def cgr_mle(N, Lambda, maxtheta=DEFAULT_MAXTHETA):
    return float(cgr_mles([N], [Lambda], maxtheta)[0])


def _suffix_scan(N_column, Lambda_column, maxtheta):
    """(value, theta_hat) at one grid time from the per-subject column."""
    N_suffix = np.cumsum(N_column[::-1])[::-1]
    Lambda_suffix = np.cumsum(Lambda_column[::-1])[::-1]
    return _maximize(N_suffix, Lambda_suffix, maxtheta)


def _maximize(N_suffix, Lambda_suffix, maxtheta):
    theta = cgr_mles(N_suffix, Lambda_suffix, maxtheta)
    terms = theta * N_suffix - np.expm1(theta) * Lambda_suffix
    best = int(np.argmax(terms))
    return max(0.0, float(terms[best])), float(theta[best])


# =============================================================================
# Matrix construction
# =============================================================================

def _grid_and_subjects(data, spec):
    subjects = data.sorted_by_entry()
    failure_times = observed_failure_times(subjects, spec.C)
    times = evaluation_grid(failure_times, spec.ctimes, spec.stoptime)
    return subjects, failure_times, times


def build_intensity_matrix(data: Dataset, spec: CGRSpec, workers=1):
    """Precompute the full subject-by-time matrices, splitting rows over workers."""
    subjects, failure_times, times = _grid_and_subjects(data, spec)
    rr = relative_risks(spec.model, subjects)

    def rows(bounds):
        start, stop = bounds
        return cum_intensity_matrix(
            spec.model.baseline, subjects.entrytimes[start:stop], subjects.survtimes[start:stop],
            rr[start:stop], times, spec.C,
        )

    blocks = ordered_map(rows, chunk_bounds(len(subjects), workers), workers)
    intensity = np.vstack(blocks) if blocks else np.zeros((0, len(times)))
    failures = failure_times[:, None] <= times[None, :]
    return IntensityMatrix(subjects, times, intensity, failures)


# =============================================================================
# Chart
# =============================================================================

def _matrix_method(data, spec, workers):
    matrix = build_intensity_matrix(data, spec, workers)
    N_suffix = np.cumsum(matrix.failures[::-1].astype(float), axis=0)[::-1]
    Lambda_suffix = np.cumsum(matrix.intensity[::-1], axis=0)[::-1]

    def columns(bounds):
        start, stop = bounds
        return [_maximize(N_suffix[:, k], Lambda_suffix[:, k], spec.maxtheta) for k in range(start, stop)]

    results = [
        point
        for block in ordered_map(columns, chunk_bounds(len(matrix.times), workers), workers)
        for point in block
    ]
    return matrix.times, results


def _rescan_method(data, spec, workers):
    subjects, failure_times, times = _grid_and_subjects(data, spec)
    rr = relative_risks(spec.model, subjects)

    def at_time(t):
        column = cum_intensity_matrix(
            spec.model.baseline, subjects.entrytimes, subjects.survtimes, rr, [t], spec.C,
        )[:, 0]
        return _suffix_scan((failure_times <= t).astype(float), column, spec.maxtheta)

    return times, ordered_map(at_time, times.tolist(), workers)


def cgr_cusum(data: Dataset, spec: CGRSpec, h=None, workers=1):
    """
    Build the CGR-CUSUM for one unit.

    Args:
        data: Records of a single unit (sorted by entry internally, ties in input order)
        spec: CGRSpec
        h: Optional early stop; the result is the prefix up to the first crossing
        workers: Thread count for the matrix build and the per-time scans

    Returns:
        Chart of kind cgr with the theta_hat trace of the maximizing subject.
    """
    if not len(data):
        raise DataValidationError("CGR-CUSUM needs at least one subject")

    if spec.method == CGRMethod.RESCAN:
        times, results = _rescan_method(data, spec, workers)
    else:
        times, results = _matrix_method(data, spec, workers)

    values = [value for value, _ in results]
    thetas = [theta for _, theta in results]
    chart = Chart(ChartKind.CGR, times, values, start_time=data.min_entrytime, theta_hat=thetas)
    logger.debug("CGR chart (%s): %d subjects, %d grid times", spec.method, len(data), len(times))
    if h is not None:
        chart = chart.truncate(h)
    return chart
