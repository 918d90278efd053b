"""
Simulated multi-unit surgery dataset.

Units of three sizes receive patients by homogeneous Poisson arrivals;
survival follows a Cox model with exponential baseline hazard and a
per-unit log hazard ratio drawn from Normal(0, theta_sd^2).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.stats import truncnorm

from .dataset import Dataset, PatientRecord
from .exceptions import DataValidationError
from .workers import ordered_map, unit_rng

logger = logging.getLogger(__name__)

COVARIATE_COLUMNS = ('exptheta', 'psival', 'age', 'sex', 'BMI')


def default_beta():
    return {'age': 0.003, 'BMI': 0.02, 'sex': 0.2}


@dataclass(frozen=True)
class GenConfig:
    """
    Generator settings. Covariate marginals are synthetic: age and BMI are
    truncated normals, sex is coded 1 = male.
    """
    n_units: int = 45
    psi_levels: tuple = (0.5, 1.0, 1.5)
    entry_horizon: float = 730.0
    baseline_rate: float = 0.01
    beta: dict = field(default_factory=default_beta)
    theta_sd: float = 0.4
    age_mean: float = 65.0
    age_sd: float = 10.0
    age_min: float = 18.0
    bmi_mean: float = 26.0
    bmi_sd: float = 4.0
    bmi_min: float = 15.0
    male_fraction: float = 0.5
    followup_cap: Optional[float] = None
    fixed_theta: Optional[float] = None
    seed: int = 0

    def __post_init__(self):
        if self.n_units < 1:
            raise DataValidationError(f"n_units must be >= 1, got {self.n_units}")
        if not self.psi_levels or any(p <= 0 for p in self.psi_levels):
            raise DataValidationError("psi_levels must be positive")
        if not self.baseline_rate > 0:
            raise DataValidationError(f"baseline_rate must be positive, got {self.baseline_rate}")
        if self.theta_sd < 0:
            raise DataValidationError(f"theta_sd must be >= 0, got {self.theta_sd}")
        if not self.entry_horizon > 0:
            raise DataValidationError(f"entry_horizon must be positive, got {self.entry_horizon}")
        if self.followup_cap is not None and not self.followup_cap > 0:
            raise DataValidationError(f"followup_cap must be positive, got {self.followup_cap}")
        unknown = set(self.beta) - {'age', 'BMI', 'sex'}
        if unknown:
            raise DataValidationError(f"Unknown covariate(s) in beta: {', '.join(sorted(unknown))}")

    def psi_for(self, index):
        """Units are split into equal consecutive blocks, one per arrival rate level."""
        per_level = math.ceil(self.n_units / len(self.psi_levels))
        return float(self.psi_levels[min(index // per_level, len(self.psi_levels) - 1)])


def poisson_arrivals(rng, psi, horizon):
    """Homogeneous Poisson(psi) arrival times on [0, horizon] via cumulative exponential gaps."""
    expected = psi * horizon
    batch = int(expected + 10 * math.sqrt(expected) + 10)
    times = np.cumsum(rng.exponential(1.0 / psi, size=batch))
    while times[-1] <= horizon:
        times = np.concatenate([times, times[-1] + np.cumsum(rng.exponential(1.0 / psi, size=batch))])
    return times[times <= horizon]


def _truncated_normal(rng, mean, sd, lower, size):
    if sd == 0:
        return np.full(size, max(mean, lower))
    a = (lower - mean) / sd
    return truncnorm.rvs(a, np.inf, loc=mean, scale=sd, size=size, random_state=rng)


def _unit_theta(config, rng):
    # Always the first draw of the unit stream so true_thetas can replay it
    theta = rng.normal(0.0, config.theta_sd)
    return config.fixed_theta if config.fixed_theta is not None else float(theta)


def true_thetas(config: GenConfig):
    """Per-unit log hazard ratio keyed by unit label."""
    return {
        str(i + 1): _unit_theta(config, unit_rng(config.seed, i))
        for i in range(config.n_units)
    }


def generate_unit(config: GenConfig, index):
    """Records of unit ``index`` (label index + 1); depends only on (seed, index)."""
    rng = unit_rng(config.seed, index)
    theta = _unit_theta(config, rng)
    psi = config.psi_for(index)

    entries = poisson_arrivals(rng, psi, config.entry_horizon)
    n = len(entries)
    age = _truncated_normal(rng, config.age_mean, config.age_sd, config.age_min, n)
    bmi = _truncated_normal(rng, config.bmi_mean, config.bmi_sd, config.bmi_min, n)
    sex = (rng.random(n) < config.male_fraction).astype(float)

    lp = (config.beta.get('age', 0.0) * age + config.beta.get('BMI', 0.0) * bmi
          + config.beta.get('sex', 0.0) * sex)
    survtimes = rng.standard_exponential(n) / (config.baseline_rate * np.exp(theta + lp))
    censorids = np.ones(n, dtype=int)
    if config.followup_cap is not None:
        capped = survtimes > config.followup_cap
        survtimes = np.where(capped, config.followup_cap, survtimes)
        censorids = np.where(capped, 0, 1)

    label = str(index + 1)
    exptheta = math.exp(theta)
    return [
        PatientRecord(
            float(s), float(x), int(d), label,
            {'exptheta': exptheta, 'psival': psi, 'age': float(a), 'sex': float(m), 'BMI': float(b)},
        )
        for s, x, d, a, m, b in zip(entries, survtimes, censorids, age, sex, bmi)
    ]


def generate_surgery_data(config: GenConfig, workers=1):
    """
    Generate every unit and merge them in unit order.

    Returns:
        Dataset with columns entrytime, survtime, censorid, unit, exptheta,
        psival, age, sex, BMI.
    """
    units = ordered_map(lambda index: generate_unit(config, index), range(config.n_units), workers)
    records = tuple(record for unit in units for record in unit)
    logger.info("Generated %d patients over %d units (seed=%s)", len(records), config.n_units, config.seed)
    return Dataset(records, COVARIATE_COLUMNS)
