"""
Chart representation shared by the Bernoulli, BK and CGR CUSUM modules.

A Chart is an immutable time-indexed series of CUSUM values. Upper charts
are nonnegative and signal at values >= h > 0; lower charts are
nonpositive and signal at values <= h < 0.
"""
import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Optional, Union

import numpy as np

from .choices import ChartKind
from .exceptions import DataValidationError


@dataclass(frozen=True)
class Chart:
    kind: str
    times: tuple = ()
    values: tuple = ()
    start_time: float = 0.0
    h: Optional[float] = None
    theta_hat: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', ChartKind(self.kind))
        object.__setattr__(self, 'times', tuple(float(t) for t in self.times))
        object.__setattr__(self, 'values', tuple(float(v) for v in self.values))
        if self.theta_hat is not None:
            object.__setattr__(self, 'theta_hat', tuple(float(v) for v in self.theta_hat))

        if len(self.times) != len(self.values):
            raise DataValidationError("chart times and values differ in length")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise DataValidationError("chart times must be strictly increasing")
        if self.is_lower and any(v > 0 for v in self.values):
            raise DataValidationError("lower chart values must be <= 0")
        if not self.is_lower and any(v < 0 for v in self.values):
            raise DataValidationError("upper chart values must be >= 0")
        if (self.theta_hat is not None) != (self.kind == ChartKind.CGR):
            raise DataValidationError("theta_hat is carried by CGR charts only")
        if self.theta_hat is not None:
            if len(self.theta_hat) != len(self.times):
                raise DataValidationError("theta_hat and chart times differ in length")
            if any(v < 0 for v in self.theta_hat):
                raise DataValidationError("theta_hat values must be >= 0")
        if self.h is not None:
            _check_limit_sign(self, self.h)

    @property
    def is_lower(self):
        return ChartKind(self.kind).is_lower

    @cached_property
    def time_array(self):
        return np.array(self.times, dtype=float)

    @cached_property
    def value_array(self):
        return np.array(self.values, dtype=float)

    def __len__(self):
        return len(self.times)

    @property
    def points(self):
        return list(zip(self.times, self.values))

    def with_limit(self, h):
        return replace(self, h=h)

    def first_crossing(self, h):
        """Index of the first stored point at or beyond h, or None."""
        _check_limit_sign(self, h)
        hits = self.value_array <= h if self.is_lower else self.value_array >= h
        if not hits.any():
            return None
        return int(np.argmax(hits))

    def truncate(self, h):
        """Prefix of the chart up to and including the first crossing of h."""
        index = self.first_crossing(h)
        if index is None:
            return self
        end = index + 1
        theta_hat = self.theta_hat[:end] if self.theta_hat is not None else None
        return replace(self, times=self.times[:end], values=self.values[:end], theta_hat=theta_hat)


@dataclass(frozen=True)
class ChartPair:
    """Two-sided chart: an upper and a lower one-sided chart over the same data."""
    upper: Chart
    lower: Chart

    def __post_init__(self):
        if self.upper.is_lower or not self.lower.is_lower:
            raise DataValidationError("ChartPair needs an upper and a lower chart")

    @property
    def start_time(self):
        return self.upper.start_time

    def truncate(self, h):
        h_lower, h_upper = _pair_limits(h)
        return ChartPair(self.upper.truncate(h_upper), self.lower.truncate(h_lower))


AnyChart = Union[Chart, ChartPair]


def _check_limit_sign(chart, h):
    if not math.isfinite(h):
        raise DataValidationError(f"control limit must be finite, got {h!r}")
    if chart.is_lower and h >= 0:
        raise DataValidationError(f"lower chart needs a negative control limit, got {h!r}")
    if not chart.is_lower and h <= 0:
        raise DataValidationError(f"upper chart needs a positive control limit, got {h!r}")


def _pair_limits(h):
    """(h_lower, h_upper) from a tuple or a single symmetric value."""
    if isinstance(h, (tuple, list)):
        h_lower, h_upper = h
        return float(h_lower), float(h_upper)
    return -abs(float(h)), abs(float(h))


def runlength(chart: AnyChart, h):
    """
    Time from the start of monitoring until the chart first reaches h.

    Args:
        chart: Chart or ChartPair
        h: control limit; for a ChartPair either (h_lower, h_upper) or a
           single value used symmetrically

    Returns:
        first crossing time - start_time, or math.inf when h is never reached
    """
    if isinstance(chart, ChartPair):
        h_lower, h_upper = _pair_limits(h)
        return min(runlength(chart.upper, h_upper), runlength(chart.lower, h_lower))
    index = chart.first_crossing(h)
    if index is None:
        return math.inf
    return chart.times[index] - chart.start_time


def chart_max(chart: Chart, window=None):
    """
    Maximum (upper charts) or minimum (lower charts) over an optional
    closed time window [t0, t1].

    A chart without points has the value 0 throughout.
    """
    values = chart.value_array
    if window is not None:
        t0, t1 = window
        mask = (chart.time_array >= t0) & (chart.time_array <= t1)
        if not mask.any():
            raise DataValidationError(f"empty window [{t0}, {t1}]")
        values = values[mask]
    if values.size == 0:
        return 0.0
    return float(values.min() if chart.is_lower else values.max())
