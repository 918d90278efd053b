"""
Static rendering of charts and funnel plots with reportlab.

SVG line charts for CUSUM charts (with the control limit as a dashed line),
SVG funnel plots and a PDF funnel summary report.
"""
import io
import math

import numpy as np

from .chartcore import ChartPair
from .exceptions import SurvchartError

try:
    from reportlab.graphics import renderSVG
    from reportlab.graphics.shapes import Circle, Drawing, Line, PolyLine, Rect, String
    from reportlab.lib import colors
    from reportlab.lib.enums import TA_CENTER
    from reportlab.lib.pagesizes import A4
    from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
    from reportlab.lib.units import inch
    from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle
    HAS_REPORTLAB = True
except ImportError:
    HAS_REPORTLAB = False


WIDTH, HEIGHT = 640, 360
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 60, 20, 30, 45

SERIES_COLORS = ['#1e293b', '#dc2626', '#2563eb', '#16a34a', '#9333ea']


def _require_reportlab():
    if not HAS_REPORTLAB:
        raise SurvchartError("reportlab is not installed")


# =============================================================================
# Plot frame
# =============================================================================

class PlotFrame:
    """Maps data coordinates onto the drawing area and draws axes."""

    def __init__(self, xs, ys, title=''):
        xs = [x for x in xs if math.isfinite(x)] or [0.0, 1.0]
        ys = [y for y in ys if math.isfinite(y)] or [0.0, 1.0]
        self.x0, self.x1 = min(xs), max(xs)
        self.y0, self.y1 = min(ys), max(ys)
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 == self.y0:
            self.y1 = self.y0 + 1.0
        self.title = title

    def px(self, x):
        span = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
        return MARGIN_LEFT + (x - self.x0) / (self.x1 - self.x0) * span

    def py(self, y):
        span = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM
        return MARGIN_BOTTOM + (y - self.y0) / (self.y1 - self.y0) * span

    def drawing(self, xlabel, ylabel):
        d = Drawing(WIDTH, HEIGHT)
        d.add(Rect(0, 0, WIDTH, HEIGHT, fillColor=colors.white, strokeColor=None))
        left, right = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
        bottom, top = MARGIN_BOTTOM, HEIGHT - MARGIN_TOP
        axis = colors.HexColor('#334155')
        d.add(Line(left, bottom, right, bottom, strokeColor=axis))
        d.add(Line(left, bottom, left, top, strokeColor=axis))

        for x in np.linspace(self.x0, self.x1, 6):
            d.add(Line(self.px(x), bottom, self.px(x), bottom - 4, strokeColor=axis))
            d.add(String(self.px(x), bottom - 16, f"{x:.4g}", fontSize=8, textAnchor='middle'))
        for y in np.linspace(self.y0, self.y1, 6):
            d.add(Line(left - 4, self.py(y), left, self.py(y), strokeColor=axis))
            d.add(String(left - 6, self.py(y) - 3, f"{y:.3g}", fontSize=8, textAnchor='end'))

        d.add(String((left + right) / 2, 8, xlabel, fontSize=10, textAnchor='middle'))
        d.add(String(8, top + 10, ylabel, fontSize=10))
        if self.title:
            d.add(String((left + right) / 2, HEIGHT - 16, self.title, fontSize=12, textAnchor='middle'))
        return d

    def polyline(self, points, color, width=1.2, dash=None):
        flat = []
        for x, y in points:
            flat.extend([self.px(x), self.py(y)])
        return PolyLine(flat, strokeColor=colors.HexColor(color), strokeWidth=width,
                        strokeDashArray=dash)


# =============================================================================
# CUSUM charts
# =============================================================================

def _step_points(chart):
    """Chart values held between stored times, starting from 0 at start_time."""
    points = [(chart.start_time, 0.0)]
    previous = 0.0
    for t, value in zip(chart.times, chart.values):
        points.append((t, previous))
        points.append((t, value))
        previous = value
    return points


def chart_drawing(chart, h=None, title=None):
    """reportlab Drawing of a Chart or ChartPair with optional control limit(s)."""
    _require_reportlab()
    parts = [chart.upper, chart.lower] if isinstance(chart, ChartPair) else [chart]
    limits = []
    if h is None:
        h = getattr(chart, 'h', None)
    if h is not None:
        if isinstance(h, (tuple, list)):
            limits = [float(v) for v in h]
        elif isinstance(chart, ChartPair):
            limits = [-abs(h), abs(h)]
        else:
            limits = [float(h)]

    series = [_step_points(part) for part in parts]
    xs = [x for s in series for x, _ in s]
    ys = [y for s in series for _, y in s] + limits + [0.0]
    kind = 'two-sided BK-CUSUM' if isinstance(chart, ChartPair) else chart.kind.label
    frame = PlotFrame(xs, ys, title or kind)
    d = frame.drawing('time', 'value')
    for i, points in enumerate(series):
        d.add(frame.polyline(points, SERIES_COLORS[i % len(SERIES_COLORS)]))
    for limit in limits:
        d.add(frame.polyline([(frame.x0, limit), (frame.x1, limit)], '#dc2626', dash=[4, 3]))
        d.add(String(frame.px(frame.x1) - 2, frame.py(limit) + 3, f"h = {limit:g}",
                     fontSize=8, textAnchor='end', fillColor=colors.HexColor('#dc2626')))
    return d


def chart_svg(chart, h=None, title=None):
    return renderSVG.drawToString(chart_drawing(chart, h, title))


# =============================================================================
# Funnel plots
# =============================================================================

def funnel_drawing(plot_data, title='Funnel plot'):
    _require_reportlab()
    curves = plot_data['curves']
    xs = [n for curve in curves.values() for n, _, _ in curve]
    xs += [n for _, n, _ in plot_data['points']]
    ys = [v for curve in curves.values() for _, lo, hi in curve for v in (lo, hi)]
    ys += [p for _, _, p in plot_data['points']]
    frame = PlotFrame(xs, ys, title)
    d = frame.drawing('number of patients', 'risk-adjusted failure proportion')

    for i, (conflev, curve) in enumerate(sorted(curves.items())):
        color = SERIES_COLORS[(i + 1) % len(SERIES_COLORS)]
        d.add(frame.polyline([(n, lo) for n, lo, _ in curve], color, dash=[3, 2]))
        d.add(frame.polyline([(n, hi) for n, _, hi in curve], color, dash=[3, 2]))
        n_last, _, hi_last = curve[-1]
        d.add(String(frame.px(n_last) - 2, frame.py(hi_last) + 3, f"{conflev:.0%}",
                     fontSize=8, textAnchor='end', fillColor=colors.HexColor(color)))
    if plot_data.get('p0') is not None:
        d.add(frame.polyline([(frame.x0, plot_data['p0']), (frame.x1, plot_data['p0'])], '#64748b'))
    for _, n, p in plot_data['points']:
        d.add(Circle(frame.px(n), frame.py(p), 2.5, fillColor=colors.HexColor('#1e293b'), strokeColor=None))
    return d


def funnel_svg(plot_data, title='Funnel plot'):
    return renderSVG.drawToString(funnel_drawing(plot_data, title))


def write_svg(svg_text, path):
    with open(path, 'w', encoding='utf-8') as handle:
        handle.write(svg_text)


# =============================================================================
# PDF report
# =============================================================================

def get_styles():
    styles = getSampleStyleSheet()
    styles.add(ParagraphStyle(
        name='ReportTitle',
        parent=styles['Heading1'],
        fontSize=20,
        spaceAfter=20,
        alignment=TA_CENTER,
        textColor=colors.HexColor('#0f172a'),
    ))
    styles.add(ParagraphStyle(
        name='ReportSubtitle',
        parent=styles['Normal'],
        fontSize=10,
        spaceAfter=12,
        alignment=TA_CENTER,
        textColor=colors.HexColor('#64748b'),
    ))
    return styles


def create_table_style():
    return TableStyle([
        # Header
        ('BACKGROUND', (0, 0), (-1, 0), colors.HexColor('#1e293b')),
        ('TEXTCOLOR', (0, 0), (-1, 0), colors.white),
        ('FONTNAME', (0, 0), (-1, 0), 'Helvetica-Bold'),
        ('FONTSIZE', (0, 0), (-1, 0), 9),

        # Body
        ('FONTNAME', (0, 1), (-1, -1), 'Helvetica'),
        ('FONTSIZE', (0, 1), (-1, -1), 8),
        ('ROWBACKGROUNDS', (0, 1), (-1, -1), [colors.white, colors.HexColor('#f8fafc')]),

        ('GRID', (0, 0), (-1, -1), 0.5, colors.HexColor('#e2e8f0')),
        ('ALIGN', (0, 0), (-1, -1), 'CENTER'),
        ('VALIGN', (0, 0), (-1, -1), 'MIDDLE'),
    ])


def funnel_report_pdf(summary, plot_data=None, path=None):
    """
    Render the funnel summary table (and the plot when plot_data is given).

    Returns:
        PDF bytes; also written to ``path`` when given.
    """
    _require_reportlab()
    buffer = io.BytesIO()
    doc = SimpleDocTemplate(buffer, pagesize=A4, topMargin=0.5 * inch, bottomMargin=0.5 * inch)
    styles = get_styles()
    elements = [
        Paragraph("Risk-adjusted funnel plot", styles['ReportTitle']),
        Paragraph(
            f"p0 = {summary.p0:.5f}, followup = {summary.followup:g}"
            + (f", cutoff = {summary.ctime:g}" if summary.ctime is not None else ''),
            styles['ReportSubtitle'],
        ),
        Spacer(1, 12),
    ]
    if plot_data is not None:
        elements.extend([funnel_drawing(plot_data), Spacer(1, 12)])

    header = ['Unit', 'Observed', 'Expected', 'Patients', 'p', *(f"{c:.0%}" for c in summary.conflevs)]
    rows = [header]
    for row in summary.rows:
        rows.append([
            row.unit, str(row.observed), f"{row.expected:.5f}", str(row.numtotal), f"{row.p:.5f}",
            *(row.classifications[c].label for c in summary.conflevs),
        ])
    table = Table(rows, repeatRows=1)
    table.setStyle(create_table_style())
    elements.append(table)
    doc.build(elements)

    pdf = buffer.getvalue()
    if path:
        with open(path, 'wb') as handle:
            handle.write(pdf)
    return pdf
