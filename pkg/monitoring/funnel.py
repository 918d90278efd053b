"""
Risk-adjusted funnel plot.

Per-unit observed and expected failure counts within a followup window,
risk-adjusted failure proportions and normal-approximation control bounds
at several confidence levels.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import norm

from .choices import Classification
from .dataset import Dataset, unit_sort_key
from .exceptions import DataValidationError
from .riskadjust import predict_probs

logger = logging.getLogger(__name__)

DEFAULT_CONFLEVS = (0.95, 0.99)


@dataclass(frozen=True)
class FunnelRow:
    unit: str
    observed: int
    expected: float
    numtotal: int
    p: float
    classifications: dict = field(default_factory=dict)


@dataclass(frozen=True)
class FunnelSummary:
    rows: tuple
    p0: float
    conflevs: tuple
    followup: float
    ctime: Optional[float] = None

    def row(self, unit):
        for r in self.rows:
            if r.unit == str(unit):
                return r
        raise KeyError(unit)


# =============================================================================
# Bounds
# =============================================================================

def funnel_bounds(p0, n, conflev):
    """
    Normal-approximation interval p0 -/+ z * sqrt(p0 (1 - p0) / n), clamped to [0, 1].

    z is the absolute standard-normal quantile at (1 - conflev) / 2.
    """
    if not 0 < p0 < 1:
        raise DataValidationError(f"p0 must lie in (0, 1), got {p0!r}")
    if not n > 0:
        raise DataValidationError(f"n must be positive, got {n!r}")
    if not 0 <= conflev < 1:
        raise DataValidationError(f"conflev must lie in [0, 1), got {conflev!r}")
    z = abs(float(norm.ppf((1.0 - conflev) / 2.0)))
    half_width = z * math.sqrt(p0 * (1.0 - p0) / n)
    return max(0.0, p0 - half_width), min(1.0, p0 + half_width)


def classify(p, p0, n, conflev):
    """Strictly outside the bounds signals; a value on a bound is in control."""
    lower, upper = funnel_bounds(p0, n, conflev)
    if p > upper:
        return Classification.WORSE
    if p < lower:
        return Classification.BETTER
    return Classification.IN_CONTROL


# =============================================================================
# Summary
# =============================================================================

def included_patients(data: Dataset, followup, ctime=None):
    """Patients whose followup window has closed by ctime (all of them without ctime)."""
    if ctime is None:
        return data
    return data.filter(lambda r: r.entrytime + followup <= ctime)


def funnel_summary(data: Dataset, model=None, followup=30.0, ctime=None, p0=None,
                   conflevs=DEFAULT_CONFLEVS):
    """
    Build the funnel plot table.

    Args:
        data: Dataset spanning any number of units
        model: LogisticModel / ManualModel for risk adjustment, or None
        followup: Dichotomization window C
        ctime: Optional cutoff; only patients with entrytime + followup <= ctime count
        p0: Optional baseline probability (defaults to the pooled failure fraction)
        conflevs: Confidence levels to classify at

    Returns:
        FunnelSummary with one row per unit, ordered by unit label.
    """
    if not followup > 0:
        raise DataValidationError(f"followup must be positive, got {followup!r}")
    conflevs = tuple(float(c) for c in conflevs)
    included = included_patients(data, followup, ctime)
    if not len(included):
        raise DataValidationError("No patients included in the funnel plot")

    outcomes = included.outcomes(followup)
    if p0 is None:
        p0 = float(outcomes.mean())
    if not 0 < p0 < 1:
        raise DataValidationError(f"baseline failure proportion p0 must lie in (0, 1), got {p0!r}")

    probs = predict_probs(model, included) if model is not None else None
    units = np.array([r.unit for r in included.records], dtype=object)

    rows = []
    for unit in sorted(set(units), key=unit_sort_key):
        mask = units == unit
        observed = int(outcomes[mask].sum())
        numtotal = int(mask.sum())
        if probs is not None:
            expected = float(math.fsum(probs[mask]))
            if expected <= 0:
                if observed > 0:
                    raise DataValidationError(
                        f"Unit {unit}: zero expected failures but {observed} observed"
                    )
                p = 0.0
            else:
                p = observed / expected * p0
        else:
            expected = numtotal * p0
            p = observed / numtotal
        rows.append(FunnelRow(
            unit=unit,
            observed=observed,
            expected=expected,
            numtotal=numtotal,
            p=p,
            classifications={c: classify(p, p0, numtotal, c) for c in conflevs},
        ))

    logger.info("Funnel plot: %d units, %d patients, p0=%.5f", len(rows), len(included), p0)
    return FunnelSummary(tuple(rows), p0, conflevs, float(followup), ctime)


def funnel_plot_data(summary: FunnelSummary, n_points=200):
    """
    Points and bound curves for rendering.

    Returns:
        dict with 'points' [(unit, numtotal, p)] and 'curves'
        {conflev: [(n, lower, upper), ...]} sampled on 1..max numtotal.
    """
    max_n = max(r.numtotal for r in summary.rows)
    grid = np.unique(np.linspace(1, max(max_n, 2), n_points))
    curves = {
        c: [(float(n), *funnel_bounds(summary.p0, float(n), c)) for n in grid]
        for c in summary.conflevs
    }
    points = [(r.unit, r.numtotal, r.p) for r in summary.rows]
    return {'points': points, 'curves': curves, 'p0': summary.p0}
