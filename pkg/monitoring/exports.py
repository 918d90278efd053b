"""
CSV import/export for charts and funnel plots.

Chart CSV: an optional ``# kind=<kind> start_time=<t> [h=<h>]`` line, then
columns time,value[,theta_hat]. Two-sided charts add a ``side`` column.
"""
import csv
import io
import json
import os

from .chartcore import Chart, ChartPair
from .choices import ChartKind
from .exceptions import DataValidationError
from .serializers import chart_from_dict


def _emit(text, target):
    if target is None:
        return text
    if hasattr(target, 'write'):
        target.write(text)
    else:
        with open(target, 'w', encoding='utf-8', newline='') as handle:
            handle.write(text)
    return text


# =============================================================================
# Chart CSV
# =============================================================================

def _metadata_line(chart, kind=None):
    parts = [f"kind={kind or chart.kind}", f"start_time={chart.start_time!r}"]
    if getattr(chart, 'h', None) is not None:
        parts.append(f"h={chart.h!r}")
    return '# ' + ' '.join(parts) + '\n'


def export_chart_csv(chart, target=None):
    """Write a Chart or ChartPair; returns the CSV text."""
    output = io.StringIO()
    writer = csv.writer(output, lineterminator='\n')

    if isinstance(chart, ChartPair):
        output.write(_metadata_line(chart.upper, kind='pair'))
        writer.writerow(['time', 'value', 'side'])
        for side, part in (('upper', chart.upper), ('lower', chart.lower)):
            for t, value in zip(part.times, part.values):
                writer.writerow([repr(t), repr(value), side])
        return _emit(output.getvalue(), target)

    output.write(_metadata_line(chart))
    header = ['time', 'value'] + (['theta_hat'] if chart.theta_hat is not None else [])
    writer.writerow(header)
    for i, (t, value) in enumerate(zip(chart.times, chart.values)):
        row = [repr(t), repr(value)]
        if chart.theta_hat is not None:
            row.append(repr(chart.theta_hat[i]))
        writer.writerow(row)
    return _emit(output.getvalue(), target)


def _parse_metadata(line):
    meta = {}
    for token in line.lstrip('#').split():
        key, _, value = token.partition('=')
        meta[key] = value
    return meta


def _infer_kind(columns, values):
    if 'theta_hat' in columns:
        return ChartKind.CGR
    if any(v < 0 for v in values):
        return ChartKind.BK_LOWER
    return ChartKind.BK


def import_chart_csv(source, kind=None, start_time=None):
    """
    Read a chart CSV.

    The metadata line supplies kind, start_time and h; explicit arguments
    override it. Without either, the kind is inferred from the columns and
    the sign of the values and start_time defaults to 0.
    """
    if hasattr(source, 'read'):
        text = source.read()
    else:
        with open(source, encoding='utf-8') as handle:
            text = handle.read()

    lines = text.splitlines()
    meta = {}
    if lines and lines[0].startswith('#'):
        meta = _parse_metadata(lines[0])
        lines = lines[1:]

    reader = csv.DictReader(lines)
    columns = reader.fieldnames or []
    if 'time' not in columns or 'value' not in columns:
        raise DataValidationError("Chart CSV needs 'time' and 'value' columns")

    rows = []
    for row_num, row in enumerate(reader, start=2):
        try:
            rows.append((float(row['time']), float(row['value']), row))
        except (TypeError, ValueError):
            raise DataValidationError(f"Row {row_num}: non-numeric chart value", rows=[row_num]) from None

    kind = kind or meta.get('kind')
    start = start_time if start_time is not None else float(meta.get('start_time', 0.0))
    h = float(meta['h']) if 'h' in meta else None

    if kind == 'pair' or 'side' in columns:
        sides = {}
        for side in ('upper', 'lower'):
            part = [(t, v) for t, v, row in rows if row.get('side') == side]
            sides[side] = Chart(
                ChartKind.BK if side == 'upper' else ChartKind.BK_LOWER,
                [t for t, _ in part], [v for _, v in part], start_time=start,
            )
        return ChartPair(sides['upper'], sides['lower'])

    kind = kind or _infer_kind(columns, [v for _, v, _ in rows])
    theta_hat = [float(row['theta_hat']) for _, _, row in rows] if 'theta_hat' in columns else None
    return Chart(kind, [t for t, _, _ in rows], [v for _, v, _ in rows],
                 start_time=start, h=h, theta_hat=theta_hat)


def load_chart(path, kind=None, start_time=None):
    """Chart from a .json document or a chart CSV."""
    if os.path.splitext(str(path))[1].lower() == '.json':
        with open(path, encoding='utf-8') as handle:
            return chart_from_dict(json.load(handle))
    return import_chart_csv(path, kind=kind, start_time=start_time)


# =============================================================================
# Funnel CSV
# =============================================================================

def export_funnel_csv(summary, target=None):
    """Summary table: unit,observed,expected,numtotal,p,<one column per conflev>."""
    output = io.StringIO()
    writer = csv.writer(output, lineterminator='\n')
    writer.writerow(['unit', 'observed', 'expected', 'numtotal', 'p', *(repr(c) for c in summary.conflevs)])
    for row in summary.rows:
        writer.writerow([
            row.unit,
            row.observed,
            repr(row.expected),
            row.numtotal,
            repr(row.p),
            *(str(row.classifications[c]) for c in summary.conflevs),
        ])
    return _emit(output.getvalue(), target)


def export_funnel_plot_csv(plot_data, target=None):
    """
    Plot data: ``point`` rows (label = unit, n, p) and ``bound`` rows
    (label = conflev, n, lower, upper).
    """
    output = io.StringIO()
    writer = csv.writer(output, lineterminator='\n')
    writer.writerow(['series', 'label', 'n', 'p', 'lower', 'upper'])
    for unit, n, p in plot_data['points']:
        writer.writerow(['point', unit, n, repr(p), '', ''])
    for conflev, curve in plot_data['curves'].items():
        for n, lower, upper in curve:
            writer.writerow(['bound', repr(conflev), repr(n), '', repr(lower), repr(upper)])
    writer.writerow(['center', '', '', repr(plot_data['p0']), '', ''])
    return _emit(output.getvalue(), target)


def import_funnel_plot_csv(source):
    if hasattr(source, 'read'):
        text = source.read()
    else:
        with open(source, encoding='utf-8') as handle:
            text = handle.read()
    reader = csv.DictReader(io.StringIO(text))
    if 'series' not in (reader.fieldnames or []):
        raise DataValidationError("Not a funnel plot-data CSV (missing 'series' column)")

    points, curves, p0 = [], {}, None
    for row in reader:
        if row['series'] == 'point':
            points.append((row['label'], float(row['n']), float(row['p'])))
        elif row['series'] == 'bound':
            curves.setdefault(float(row['label']), []).append(
                (float(row['n']), float(row['lower']), float(row['upper']))
            )
        elif row['series'] == 'center':
            p0 = float(row['p'])
    return {'points': points, 'curves': curves, 'p0': p0}


def is_funnel_plot_csv(path):
    with open(path, encoding='utf-8') as handle:
        return handle.readline().startswith('series,')
