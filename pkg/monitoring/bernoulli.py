"""
Risk-adjusted Bernoulli CUSUM over outcomes dichotomized at a followup window.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chartcore import Chart
from .choices import ChartKind
from .dataset import Dataset
from .exceptions import DataValidationError
from .riskadjust import predict_probs

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BernoulliSpec:
    """
    Chart parameters. Valid combinations:
        - model + theta: per-patient p0_i from a logistic model, odds ratio e^theta
        - p0 + theta: constant p0, odds ratio e^theta
        - p0 + p1: constant p0 against alternative p1
    """
    theta: Optional[float] = None
    p0: Optional[float] = None
    p1: Optional[float] = None
    followup: float = 30.0
    model: Optional[object] = None

    def __post_init__(self):
        has_model = self.model is not None
        has_theta = self.theta is not None
        has_p0 = self.p0 is not None
        has_p1 = self.p1 is not None
        combos = {
            'model+theta': has_model and has_theta and not has_p0 and not has_p1,
            'p0+theta': has_p0 and has_theta and not has_model and not has_p1,
            'p0+p1': has_p0 and has_p1 and not has_model and not has_theta,
        }
        if sum(combos.values()) != 1:
            raise DataValidationError(
                "Bernoulli chart needs exactly one of: model + theta, p0 + theta, p0 + p1"
            )
        for name in ('p0', 'p1'):
            value = getattr(self, name)
            if value is not None and not 0 < value < 1:
                raise DataValidationError(f"{name} must lie in (0, 1), got {value!r}")
        if has_theta and not math.isfinite(self.theta):
            raise DataValidationError(f"theta must be finite, got {self.theta!r}")
        if not self.followup > 0:
            raise DataValidationError(f"followup must be positive, got {self.followup!r}")

    @property
    def parametrization(self):
        if self.model is not None:
            return 'model+theta'
        return 'p0+theta' if self.theta is not None else 'p0+p1'

    @property
    def log_odds_ratio(self):
        if self.theta is not None:
            return self.theta
        return math.log(self.p1 * (1 - self.p0) / (self.p0 * (1 - self.p1)))

    @property
    def is_lower(self):
        return self.log_odds_ratio < 0

    def baseline_probabilities(self, data: Dataset):
        if self.model is not None:
            return predict_probs(self.model, data)
        return np.full(len(data), self.p0)


def bernoulli_weights(outcomes, p0s, spec: BernoulliSpec):
    """Vectorised log-likelihood ratio increments W for outcomes X and baseline p0_i."""
    x = np.asarray(outcomes, dtype=float)
    p0s = np.asarray(p0s, dtype=float)
    if np.any((p0s <= 0) | (p0s >= 1)):
        raise DataValidationError("baseline probabilities must lie strictly between 0 and 1")
    if spec.theta is not None:
        return x * spec.theta - np.log1p(p0s * math.expm1(spec.theta))
    p1 = spec.p1
    return x * np.log(p1 * (1 - p0s) / (p0s * (1 - p1))) + np.log((1 - p1) / (1 - p0s))


def bernoulli_weight(outcome, p0_i, spec: BernoulliSpec):
    """
    Chart increment for one patient.

    Odds-ratio form: W = X theta - ln(1 - p0 + e^theta p0).
    (p0, p1) form:   W = X ln(p1 (1 - p0) / (p0 (1 - p1))) + ln((1 - p1) / (1 - p0)).
    """
    if outcome not in (0, 1):
        raise DataValidationError(f"outcome must be 0 or 1, got {outcome!r}")
    return float(bernoulli_weights([outcome], [p0_i], spec)[0])


def indeterminate_outcomes(data: Dataset, followup):
    """Indices of patients censored before the followup window closed."""
    mask = (data.survtimes < followup) & (data.censorids == 0)
    return [int(i) for i in np.flatnonzero(mask)]


def bernoulli_cusum(data: Dataset, spec: BernoulliSpec, stoptime=None, h=None):
    """
    Build the Bernoulli CUSUM for one unit.

    Patients are processed in entry order (ties keep input order); each
    contributes at its outcome-known time entrytime + followup. Patients
    sharing an outcome time enter as one summed increment, so one point is
    stored per distinct outcome time and their order does not matter.
    Upper charts use S = max(0, S + W); lower charts (log odds ratio < 0)
    report S = min(0, S - W).

    Raises:
        DataValidationError listing patients whose outcome is indeterminate.
    """
    followup = spec.followup
    ordered = data.sorted_by_entry()
    if stoptime is not None:
        ordered = ordered.filter(lambda r: r.entrytime + followup <= stoptime)
    start_time = ordered.min_entrytime if len(ordered) else data.min_entrytime
    kind = ChartKind.BERNOULLI_LOWER if spec.is_lower else ChartKind.BERNOULLI

    bad = indeterminate_outcomes(ordered, followup)
    if bad:
        shown = ', '.join(
            f"(entrytime={ordered.records[i].entrytime}, survtime={ordered.records[i].survtime})"
            for i in bad[:10]
        )
        raise DataValidationError(
            f"{len(bad)} patient(s) censored before the followup window closed: {shown}",
            rows=bad,
        )

    if not len(ordered):
        return Chart(kind, (), (), start_time=start_time)

    weights = bernoulli_weights(ordered.outcomes(followup), spec.baseline_probabilities(ordered), spec)
    outcome_times = ordered.entrytimes + followup

    # Outcomes known at the same time enter as one summed increment
    times, first = np.unique(outcome_times, return_index=True)
    increments = np.add.reduceat(weights, first)

    values = []
    statistic = 0.0
    for w in increments.tolist():
        if spec.is_lower:
            statistic = min(0.0, statistic - w)
        else:
            statistic = max(0.0, statistic + w)
        values.append(statistic)

    chart = Chart(kind, times, values, start_time=start_time)
    if h is not None:
        chart = chart.truncate(h)
    logger.debug("Bernoulli chart: %d patients, %d points", len(ordered), len(chart))
    return chart
