"""
Risk-adjustment models.

Logistic regression (for the discrete-time Bernoulli chart and the funnel
plot) and Cox proportional hazards with a Breslow cumulative baseline hazard
(for the continuous-time BK- and CGR-CUSUM), plus evaluation of subject
cumulative intensities Lambda_i(t).
"""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import ClassVar, Mapping, Optional, Union

import numpy as np
from scipy.special import expit

from .choices import ModelKind
from .dataset import Dataset, PatientRecord
from .exceptions import ConvergenceError, DataValidationError, ModelFitError

logger = logging.getLogger(__name__)

MAX_ITER = 50
SCORE_TOL = 1e-8
SEPARATION_LIMIT = 30.0
MAX_HALVINGS = 30


# =============================================================================
# Baseline Hazards
# =============================================================================

@dataclass(frozen=True)
class RateBaseline:
    """Constant baseline hazard: H0(x) = rate * x."""
    rate: float

    def __post_init__(self):
        if not (math.isfinite(self.rate) and self.rate > 0):
            raise DataValidationError(f"baseline rate must be positive, got {self.rate!r}")

    def cumhaz(self, x):
        return self.rate * np.clip(np.asarray(x, dtype=float), 0.0, None)

    def inverse(self, y):
        return np.clip(np.asarray(y, dtype=float), 0.0, None) / self.rate


@dataclass(frozen=True)
class StepBaseline:
    """
    Right-continuous step cumulative baseline hazard.

    H0(x) = values[k] for times[k] <= x < times[k+1], 0 before the first step
    and for x <= 0; held constant after the last step.
    """
    times: tuple
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, 'times', tuple(float(t) for t in self.times))
        object.__setattr__(self, 'values', tuple(float(v) for v in self.values))
        if len(self.times) != len(self.values):
            raise DataValidationError("baseline times and values differ in length")
        t, v = np.array(self.times), np.array(self.values)
        if np.any(np.diff(t) <= 0):
            raise DataValidationError("baseline times must be strictly increasing")
        if np.any(np.diff(v) < 0) or np.any(v < 0):
            raise DataValidationError("baseline cumulative hazard must be nonnegative and nondecreasing")

    @cached_property
    def _times(self):
        return np.array(self.times, dtype=float)

    @cached_property
    def _values(self):
        return np.array(self.values, dtype=float)

    def cumhaz(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self._times, x, side='right')
        padded = np.concatenate(([0.0], self._values))
        return np.where(x > 0, padded[idx], 0.0)

    def inverse(self, y):
        """Generalised inverse inf{x: H0(x) >= y}; +inf beyond the last step."""
        y = np.asarray(y, dtype=float)
        idx = np.searchsorted(self._values, y, side='left')
        padded = np.concatenate((self._times, [np.inf]))
        return np.where(y > 0, padded[idx], 0.0)


Baseline = Union[RateBaseline, StepBaseline]


# =============================================================================
# Model Types
# =============================================================================

@dataclass(frozen=True)
class LogisticModel:
    """Logistic model for failure within ``followup`` time units of entry."""
    kind: ClassVar[str] = ModelKind.LOGISTIC

    intercept: float
    coefficients: Mapping[str, float] = field(default_factory=dict)
    followup: float = 30.0
    converged: bool = True
    p0_marginal: float = float('nan')

    baseline = None


@dataclass(frozen=True)
class CoxModel:
    """Cox proportional hazards model with Breslow cumulative baseline hazard."""
    kind: ClassVar[str] = ModelKind.COX

    coefficients: Mapping[str, float]
    baseline: StepBaseline
    converged: bool = True

    intercept = None


@dataclass(frozen=True)
class ManualModel:
    """
    User-specified model. With an intercept it can stand in for a logistic
    model, with a baseline for a Cox model (or both).
    """
    kind: ClassVar[str] = ModelKind.MANUAL

    coefficients: Mapping[str, float] = field(default_factory=dict)
    intercept: Optional[float] = None
    baseline: Optional[Baseline] = None
    followup: Optional[float] = None


RiskModel = Union[LogisticModel, CoxModel, ManualModel]


def _check_coefficients(model):
    for name, value in model.coefficients.items():
        if not math.isfinite(value):
            raise DataValidationError(f"coefficient '{name}' is not finite")


def linear_predictor(model: RiskModel, covariates: Mapping[str, float]):
    """Z * beta for one subject (intercept excluded)."""
    missing = [name for name in model.coefficients if name not in covariates]
    if missing:
        raise DataValidationError(f"Missing covariate(s): {', '.join(missing)}")
    return math.fsum(beta * float(covariates[name]) for name, beta in model.coefficients.items())


def linear_predictors(model: RiskModel, data: Dataset):
    """Vector of Z_i * beta over every record of ``data``."""
    names = tuple(model.coefficients)
    if not names:
        return np.zeros(len(data))
    beta = np.array([model.coefficients[name] for name in names], dtype=float)
    return data.covariate_matrix(names) @ beta


# =============================================================================
# Evaluation
# =============================================================================

def _require_intercept(model):
    if isinstance(model, CoxModel):
        raise DataValidationError("A Cox model cannot produce failure probabilities; use a logistic model")
    return model.intercept if model.intercept is not None else 0.0


def _require_baseline(model):
    if model.baseline is None:
        raise DataValidationError("Model has no cumulative baseline hazard")
    return model.baseline


def predict_prob(model: RiskModel, covariates: Mapping[str, float]):
    """Failure probability 1 / (1 + exp(-(beta0 + Z beta)))."""
    intercept = _require_intercept(model)
    return float(expit(intercept + linear_predictor(model, covariates)))


def predict_probs(model: RiskModel, data: Dataset):
    intercept = _require_intercept(model)
    return expit(intercept + linear_predictors(model, data))


def relative_risk(model: RiskModel, covariates: Mapping[str, float]):
    """Hazard multiplier exp(Z beta); 1 for a model without covariates."""
    return math.exp(linear_predictor(model, covariates))


def relative_risks(model: RiskModel, data: Dataset):
    return np.exp(linear_predictors(model, data))


def at_risk_time(t, entrytime, survtime, truncation=None):
    """a_i(t) = clamp(t - S_i, 0, min(X_i, C)), vectorised over subjects and times."""
    cap = np.asarray(survtime, dtype=float)
    if truncation is not None:
        cap = np.minimum(cap, truncation)
    return np.clip(np.asarray(t, dtype=float) - np.asarray(entrytime, dtype=float), 0.0, cap)


def subject_cum_intensity(model: RiskModel, record: PatientRecord, t, truncation=None):
    """
    Cumulative intensity Lambda_i(t) = exp(Z_i beta) * H0(a_i(t)).

    Zero before entry; constant once the subject leaves the risk set
    (failure, censoring or the truncation window C).
    """
    baseline = _require_baseline(model)
    rr = relative_risk(model, record.covariates)
    a = at_risk_time(t, record.entrytime, record.survtime, truncation)
    return float(rr * baseline.cumhaz(a))


def cum_intensity_matrix(baseline: Baseline, entrytimes, survtimes, rr, times, truncation=None):
    """
    Lambda_i(t_k) for every subject i (rows) and time t_k (columns).

    Each cell is computed independently, so any split of rows or columns
    over workers gives identical values.
    """
    entrytimes = np.asarray(entrytimes, dtype=float)[:, None]
    survtimes = np.asarray(survtimes, dtype=float)[:, None]
    times = np.asarray(times, dtype=float)[None, :]
    a = at_risk_time(times, entrytimes, survtimes, truncation)
    return np.asarray(rr, dtype=float)[:, None] * baseline.cumhaz(a)


# =============================================================================
# Fitting - Logistic (IRLS)
# =============================================================================

def _logistic_loglik(X, y, beta):
    eta = X @ beta
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def fit_logistic(data: Dataset, covariate_subset=(), followup=30.0):
    """
    Fit P(failure within followup) by iteratively reweighted least squares.

    Outcome per record: survtime <= followup and censorid == 1.

    Raises:
        DataValidationError: bad followup or empty data
        ModelFitError: degenerate design or complete separation
    """
    if not (followup > 0):
        raise DataValidationError(f"followup must be positive, got {followup!r}")
    if not len(data):
        raise DataValidationError("Cannot fit a logistic model on an empty dataset")

    names = tuple(covariate_subset)
    y = data.outcomes(followup).astype(float)
    n = len(y)
    X = np.column_stack([np.ones(n), data.covariate_matrix(names)])
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise ModelFitError(
            f"degenerate design: covariates {list(names)} are constant or collinear"
        )
    if y.min() == y.max():
        raise ModelFitError("complete separation: every outcome is identical")

    beta = np.zeros(X.shape[1])
    beta[0] = math.log(y.mean() / (1.0 - y.mean()))
    loglik = _logistic_loglik(X, y, beta)
    converged = False

    for iteration in range(1, MAX_ITER + 1):
        mu = expit(X @ beta)
        score = X.T @ (y - mu)
        if np.max(np.abs(score)) / n < SCORE_TOL:
            converged = True
            break
        weights = mu * (1.0 - mu)
        information = X.T @ (weights[:, None] * X)
        step = np.linalg.solve(information, score)

        # Step-halving whenever the likelihood would decrease
        for _ in range(MAX_HALVINGS):
            candidate = beta + step
            candidate_ll = _logistic_loglik(X, y, candidate)
            if candidate_ll >= loglik - 1e-12 * abs(loglik):
                break
            step = step / 2.0
        beta, loglik = candidate, candidate_ll

        if np.max(np.abs(beta)) > SEPARATION_LIMIT:
            raise ModelFitError(
                f"complete separation: coefficients diverged beyond {SEPARATION_LIMIT}"
            )

    if converged:
        # One more Newton step pins the score equations to rounding level
        mu = expit(X @ beta)
        information = X.T @ ((mu * (1.0 - mu))[:, None] * X)
        beta = beta + np.linalg.solve(information, X.T @ (y - mu))
    else:
        logger.warning("Logistic IRLS did not converge in %d iterations", MAX_ITER)

    fitted = expit(X @ beta)
    if np.max(np.abs(fitted - y)) < 1e-6:
        raise ModelFitError("complete separation: outcomes perfectly predicted")
    logger.debug("Logistic fit: %d iterations, converged=%s", iteration, converged)

    return LogisticModel(
        intercept=float(beta[0]),
        coefficients={name: float(b) for name, b in zip(names, beta[1:])},
        followup=float(followup),
        converged=converged,
        p0_marginal=float(fitted.mean()),
    )


# =============================================================================
# Fitting - Cox proportional hazards (Newton-Raphson, Breslow ties)
# =============================================================================

class _CoxDesign:
    """Sorted survival data with the risk-set bookkeeping for Breslow ties."""

    def __init__(self, data: Dataset, names):
        order = np.argsort(data.survtimes, kind='stable')
        self.x = data.survtimes[order]
        self.d = data.censorids[order]
        Z = data.covariate_matrix(names)[order]
        self.center = Z.mean(axis=0) if len(Z) else np.zeros(len(names))
        self.Z = Z - self.center
        self.event_times, self.deaths = np.unique(self.x[self.d == 1], return_counts=True)
        self.risk_start = np.searchsorted(self.x, self.event_times, side='left')
        self.event_z_sum = self.Z[self.d == 1].sum(axis=0)

    def risk_sums(self, beta):
        """S0, S1, S2 at every event time, with a common scaling exp(-shift)."""
        eta = self.Z @ beta
        shift = float(eta.max()) if len(eta) else 0.0
        w = np.exp(eta - shift)
        s0 = np.cumsum(w[::-1])[::-1]
        wz = w[:, None] * self.Z
        s1 = np.cumsum(wz[::-1], axis=0)[::-1]
        s2 = np.cumsum((wz[:, :, None] * self.Z[:, None, :])[::-1], axis=0)[::-1]
        idx = self.risk_start
        return eta, shift, s0[idx], s1[idx], s2[idx]

    def terms(self, beta):
        eta, shift, s0, s1, s2 = self.risk_sums(beta)
        loglik = float(np.sum(eta[self.d == 1]) - np.sum(self.deaths * (np.log(s0) + shift)))
        mean_z = s1 / s0[:, None]
        score = self.event_z_sum - np.sum(self.deaths[:, None] * mean_z, axis=0)
        second = s2 / s0[:, None, None] - mean_z[:, :, None] * mean_z[:, None, :]
        information = np.sum(self.deaths[:, None, None] * second, axis=0)
        return loglik, score, information

    def breslow(self, beta):
        """Breslow cumulative baseline hazard at the uncentered covariates."""
        s0 = np.cumsum(np.exp(self.Z @ beta)[::-1])[::-1][self.risk_start]
        increments = self.deaths / s0 * math.exp(-float(self.center @ beta))
        return StepBaseline(tuple(self.event_times), tuple(np.cumsum(increments)))


def cox_partial_loglik(data: Dataset, covariate_subset, beta):
    """
    Breslow log partial likelihood with its score and observed information.

    Returns:
        (loglik, score, information) at ``beta`` (ordered like covariate_subset).
    """
    design = _CoxDesign(data, tuple(covariate_subset))
    beta = np.asarray(beta, dtype=float)
    loglik, score, information = design.terms(beta)
    # Centering shifts eta by a constant that cancels in the partial likelihood
    return loglik, score, information


def fit_coxph(data: Dataset, covariate_subset=()):
    """
    Fit a Cox model on the follow-up time scale by Newton-Raphson.

    Raises:
        DataValidationError: no observed events
        ModelFitError: degenerate design
        ConvergenceError: score tolerance not met within MAX_ITER iterations
    """
    names = tuple(covariate_subset)
    if not len(data) or int(data.censorids.sum()) == 0:
        raise DataValidationError("Cannot fit a Cox model without observed events")

    design = _CoxDesign(data, names)
    p = len(names)
    if p and np.linalg.matrix_rank(design.Z) < p:
        raise ModelFitError(
            f"degenerate design: covariates {list(names)} are constant or collinear"
        )

    beta = np.zeros(p)
    converged = p == 0
    iteration = 0
    if p:
        loglik, score, information = design.terms(beta)
        for iteration in range(1, MAX_ITER + 1):
            if np.max(np.abs(score)) < SCORE_TOL:
                converged = True
                break
            step = np.linalg.solve(information, score)
            for _ in range(MAX_HALVINGS):
                candidate = beta + step
                c_loglik, c_score, c_information = design.terms(candidate)
                if c_loglik >= loglik - 1e-12 * abs(loglik):
                    break
                step = step / 2.0
            if np.max(np.abs(candidate - beta)) < 1e-13 * max(1.0, np.max(np.abs(beta))):
                # Rounding floor reached: the score cannot shrink further
                beta, loglik, score, information = candidate, c_loglik, c_score, c_information
                converged = True
                break
            beta, loglik, score, information = candidate, c_loglik, c_score, c_information

        if not converged:
            raise ConvergenceError(
                f"Cox Newton-Raphson did not converge in {MAX_ITER} iterations "
                f"(max |score| = {np.max(np.abs(score)):.3e})"
            )
        if not np.all(np.isfinite(beta)):
            raise ModelFitError("Cox coefficients are not finite")

    logger.debug("Cox fit: %d iterations, beta=%s", iteration, beta)
    return CoxModel(
        coefficients={name: float(b) for name, b in zip(names, beta)},
        baseline=design.breslow(beta),
        converged=converged,
    )
