"""
JSON documents for models, charts and results.

Each ``*_to_dict`` returns plain JSON-compatible data; the matching
``*_from_dict`` rebuilds the value exactly.
"""
import json
import math

from .chartcore import Chart, ChartPair
from .choices import ModelKind
from .exceptions import DataValidationError
from .riskadjust import CoxModel, LogisticModel, ManualModel, RateBaseline, StepBaseline


# =============================================================================
# Models
# =============================================================================

def baseline_to_dict(baseline):
    if baseline is None:
        return None
    if isinstance(baseline, RateBaseline):
        return {'rate': baseline.rate}
    return {'times': list(baseline.times), 'values': list(baseline.values)}


def baseline_from_dict(data):
    if data is None:
        return None
    if 'rate' in data:
        return RateBaseline(float(data['rate']))
    try:
        return StepBaseline(tuple(data['times']), tuple(data['values']))
    except KeyError as e:
        raise DataValidationError(f"baseline needs 'rate' or 'times' and 'values' (missing {e})") from e


def model_to_dict(model):
    document = {
        'kind': str(model.kind),
        'coefficients': dict(model.coefficients),
    }
    if model.intercept is not None:
        document['intercept'] = model.intercept
    if model.baseline is not None:
        document['baseline'] = baseline_to_dict(model.baseline)
    if getattr(model, 'followup', None) is not None:
        document['followup'] = model.followup
    if hasattr(model, 'converged'):
        document['converged'] = model.converged
    if isinstance(model, LogisticModel):
        document['p0_marginal'] = model.p0_marginal
    return document


def model_from_dict(data):
    """Rebuild a model; documents without a kind are read as manual models."""
    kind = data.get('kind', ModelKind.MANUAL)
    coefficients = {str(k): float(v) for k, v in (data.get('coefficients') or {}).items()}
    for name, value in coefficients.items():
        if not math.isfinite(value):
            raise DataValidationError(f"coefficient '{name}' is not finite")

    if kind == ModelKind.LOGISTIC:
        return LogisticModel(
            intercept=float(data['intercept']),
            coefficients=coefficients,
            followup=float(data['followup']),
            converged=bool(data.get('converged', True)),
            p0_marginal=float(data.get('p0_marginal', float('nan'))),
        )
    if kind == ModelKind.COX:
        baseline = baseline_from_dict(data.get('baseline'))
        if not isinstance(baseline, StepBaseline):
            raise DataValidationError("A Cox model document needs a step baseline (times, values)")
        return CoxModel(coefficients, baseline, bool(data.get('converged', True)))
    if kind == ModelKind.MANUAL:
        intercept = data.get('intercept')
        followup = data.get('followup')
        return ManualModel(
            coefficients=coefficients,
            intercept=float(intercept) if intercept is not None else None,
            baseline=baseline_from_dict(data.get('baseline')),
            followup=float(followup) if followup is not None else None,
        )
    raise DataValidationError(f"Unknown model kind {kind!r}")


def load_model(path):
    with open(path, encoding='utf-8') as handle:
        try:
            return model_from_dict(json.load(handle))
        except json.JSONDecodeError as e:
            raise DataValidationError(f"Model file {path} is not valid JSON: {e}") from e


def dump_json(document, path=None):
    text = json.dumps(document, indent=2, allow_nan=True)
    if path:
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(text + '\n')
    return text


# =============================================================================
# Charts
# =============================================================================

def _number(value):
    """inf/nan become strings so documents stay strict JSON."""
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def chart_to_dict(chart):
    if isinstance(chart, ChartPair):
        return {'kind': 'pair', 'upper': chart_to_dict(chart.upper), 'lower': chart_to_dict(chart.lower)}
    points = []
    for i, (t, value) in enumerate(zip(chart.times, chart.values)):
        point = {'t': t, 'value': value}
        if chart.theta_hat is not None:
            point['theta_hat'] = chart.theta_hat[i]
        points.append(point)
    document = {'kind': str(chart.kind), 'start_time': chart.start_time}
    if chart.h is not None:
        document['h'] = chart.h
    document['points'] = points
    return document


def chart_from_dict(data):
    if data.get('kind') == 'pair':
        return ChartPair(chart_from_dict(data['upper']), chart_from_dict(data['lower']))
    points = data.get('points', [])
    theta_hat = [p['theta_hat'] for p in points] if points and 'theta_hat' in points[0] else None
    if theta_hat is None and data['kind'] == 'cgr':
        theta_hat = []
    return Chart(
        kind=data['kind'],
        times=[p['t'] for p in points],
        values=[p['value'] for p in points],
        start_time=float(data.get('start_time', 0.0)),
        h=data.get('h'),
        theta_hat=theta_hat,
    )


# =============================================================================
# Results
# =============================================================================

def control_limit_to_dict(result):
    return {
        'kind': result.kind,
        'h': result.h,
        'alpha': result.alpha,
        'achieved_alpha': result.achieved_alpha,
        'n_sim': result.n_sim,
        'seed': result.seed,
        'lower': result.lower,
        'config': result.config,
        'maxima': list(result.maxima),
    }


def funnel_summary_to_dict(summary):
    return {
        'p0': summary.p0,
        'followup': summary.followup,
        'ctime': summary.ctime,
        'conflevs': list(summary.conflevs),
        'rows': [
            {
                'unit': row.unit,
                'observed': row.observed,
                'expected': row.expected,
                'numtotal': row.numtotal,
                'p': row.p,
                'classifications': {str(c): str(v) for c, v in row.classifications.items()},
            }
            for row in summary.rows
        ],
    }


def arrival_estimates_to_list(estimates):
    return [
        {'unit': e.unit, 'psi_hat': e.psi_hat, 'n': e.n, 'span': e.span}
        for e in estimates
    ]


def bundle_to_dict(bundle):
    """Mirror of the assist bundle: call echo, data sizes, models and parameters."""
    return {
        'call': bundle.call,
        'data': {'records': len(bundle.data), 'units': bundle.data.units()},
        'baseline_data': {'records': len(bundle.baseline_data), 'units': bundle.baseline_data.units()},
        'glmmod': model_to_dict(bundle.glm_model) if bundle.glm_model is not None else None,
        'coxphmod': model_to_dict(bundle.cox_model) if bundle.cox_model is not None else None,
        'theta': bundle.theta,
        'psi': bundle.psi,
        'time': bundle.time,
        'alpha': bundle.alpha,
        'maxtheta': bundle.maxtheta,
        'followup': bundle.followup,
        'p0': bundle.p0,
    }


def workflow_to_dict(steps):
    return [
        {
            'kind': step.kind,
            'h': step.limit.h,
            'achieved_alpha': step.limit.achieved_alpha,
            'runlength': _number(step.runlength),
            'chart': chart_to_dict(step.chart),
        }
        for step in steps
    ]
