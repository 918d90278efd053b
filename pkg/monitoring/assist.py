"""
Assisted monitoring workflow.

parameter_assist fits the risk-adjustment models on the baseline data and
collects every parameter the control limit engine and the charts need, so
the three steps (limits, charts, run lengths) run from one bundle.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional

from .bernoulli import BernoulliSpec, bernoulli_cusum
from .bkcusum import BKSpec, bk_cusum
from .cgrcusum import DEFAULT_MAXTHETA, CGRSpec, cgr_cusum
from .chartcore import runlength
from .choices import LimitKind
from .controllimit import DEFAULT_ALPHA, DEFAULT_THETA, SimConfig, control_limit
from .dataset import Dataset, pooled_arrival_rate
from .exceptions import DataValidationError
from .riskadjust import fit_coxph, fit_logistic

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AssistBundle:
    call: dict
    data: Dataset
    baseline_data: Dataset
    glm_model: Optional[object] = None
    cox_model: Optional[object] = None
    theta: float = DEFAULT_THETA
    psi: float = 1.0
    time: float = 0.0
    alpha: float = DEFAULT_ALPHA
    maxtheta: float = DEFAULT_MAXTHETA
    followup: Optional[float] = None
    p0: Optional[float] = None
    covariates: Optional[tuple] = None
    _unadjusted: dict = field(default_factory=dict, repr=False, compare=False)

    def require_followup(self):
        if self.followup is None:
            raise DataValidationError(
                "followup is required for discrete time charts; rerun parameter_assist with followup"
            )
        return self.followup

    @property
    def survival_model(self):
        """The fitted Cox model, or an unadjusted one (Nelson-Aalen baseline) without covariates."""
        if self.cox_model is not None:
            return self.cox_model
        if 'cox' not in self._unadjusted:
            self._unadjusted['cox'] = fit_coxph(self.baseline_data, ())
        return self._unadjusted['cox']

    def bernoulli_spec(self):
        followup = self.require_followup()
        if self.glm_model is not None:
            return BernoulliSpec(theta=self.theta, followup=followup, model=self.glm_model)
        return BernoulliSpec(theta=self.theta, p0=self.p0, followup=followup)

    def bk_spec(self, **options):
        return BKSpec(self.theta, self.survival_model, **options)

    def cgr_spec(self, **options):
        return CGRSpec(self.survival_model, maxtheta=self.maxtheta, **options)

    def sim_config(self, kind, n_sim=None, seed=0, h_precision=2):
        kind = LimitKind(kind)
        options = dict(
            time=self.time, psi=self.psi, alpha=self.alpha, n_sim=n_sim,
            h_precision=h_precision, seed=seed, theta=self.theta,
            maxtheta=self.maxtheta, baseline_data=self.baseline_data,
        )
        if kind == LimitKind.BERNOULLI:
            spec = self.bernoulli_spec()
            return SimConfig(model=spec.model, followup=spec.followup,
                             p0=None if spec.model is not None else self.p0, **options)
        return SimConfig(model=self.survival_model, **options)

    def supported_kinds(self):
        kinds = [LimitKind.BK, LimitKind.CGR]
        if self.followup is not None and (self.glm_model is not None or self.p0 is not None):
            kinds.insert(0, LimitKind.BERNOULLI)
        return kinds


def _check_covariates(covariates, *datasets):
    for data in datasets:
        missing = [c for c in covariates if c not in data.covariate_names]
        if missing:
            raise DataValidationError(f"Covariate(s) not present in data: {', '.join(missing)}")


def baseline_failure_fraction(baseline_data: Dataset, followup):
    if followup is None or not len(baseline_data):
        return None
    return float(baseline_data.outcomes(followup).mean())


def parameter_assist(baseline_data: Dataset, data: Dataset, covariates=None, followup=None,
                     theta=DEFAULT_THETA, time=None, alpha=DEFAULT_ALPHA, maxtheta=DEFAULT_MAXTHETA):
    """
    Collect the workflow parameters.

    Args:
        baseline_data: In-control reference data used for fitting and resampling
        data: Data to monitor
        covariates: Risk-adjustment covariates; None performs no risk adjustment
        followup: Window C, required for discrete time charts
        theta: Log hazard/odds ratio to detect (default ln 2)
        time: Control limit horizon (default: largest baseline entry time)
        alpha: Type-I error (default 0.05)
        maxtheta: Cap on the CGR hazard ratio estimate

    Returns:
        AssistBundle
    """
    if covariates is not None:
        covariates = tuple(covariates)
        _check_covariates(covariates, baseline_data, data)
    if followup is not None and not followup > 0:
        raise DataValidationError(f"followup must be positive, got {followup!r}")
    if not len(baseline_data):
        raise DataValidationError("baseline data is empty")

    glm_model = cox_model = None
    if covariates is not None:
        if followup is not None:
            glm_model = fit_logistic(baseline_data, covariates, followup)
        cox_model = fit_coxph(baseline_data, covariates)

    psi = pooled_arrival_rate(baseline_data)
    time = float(time) if time is not None else baseline_data.max_entrytime
    p0 = baseline_failure_fraction(baseline_data, followup)

    call = {
        'covariates': list(covariates) if covariates is not None else None,
        'followup': followup, 'theta': theta, 'time': time, 'alpha': alpha, 'maxtheta': maxtheta,
    }
    logger.info("Assist bundle: psi=%.4f time=%s p0=%s models=%s", psi, time, p0,
                [m.kind for m in (glm_model, cox_model) if m is not None])
    return AssistBundle(
        call=call, data=data, baseline_data=baseline_data,
        glm_model=glm_model, cox_model=cox_model, theta=float(theta), psi=psi, time=time,
        alpha=float(alpha), maxtheta=float(maxtheta), followup=followup, p0=p0,
        covariates=covariates,
    )


@dataclass(frozen=True)
class WorkflowStep:
    kind: str
    limit: object
    chart: object
    runlength: float


def run_workflow(bundle: AssistBundle, unit=None, n_sim=None, seed=0, workers=None, progress=None):
    """
    Control limits for every chart the bundle supports, then the charts of
    ``data`` (optionally one unit) and their run lengths.
    """
    data = bundle.data.for_unit(unit) if unit is not None else bundle.data
    if not len(data):
        raise DataValidationError(f"No records to monitor for unit {unit}")
    steps = []
    for kind in bundle.supported_kinds():
        limit = control_limit(kind, bundle.sim_config(kind, n_sim=n_sim, seed=seed),
                              workers=workers, progress=progress)
        if kind == LimitKind.BERNOULLI:
            chart = bernoulli_cusum(data, bundle.bernoulli_spec())
        elif kind == LimitKind.BK:
            chart = bk_cusum(data, bundle.bk_spec())
        else:
            chart = cgr_cusum(data, bundle.cgr_spec(), workers=1)
        chart = chart.with_limit(limit.h)
        steps.append(WorkflowStep(kind.value, limit, chart, runlength(chart, limit.h)))
    return steps