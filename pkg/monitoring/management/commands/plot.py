"""
Static SVG of a stored chart (with its control limit) or of funnel plot data.
Run with: survchart plot --chart chart.csv --h 8.52 --out chart.svg
"""
from monitoring.exports import import_funnel_plot_csv, is_funnel_plot_csv, load_chart
from monitoring.reports import chart_svg, funnel_svg, write_svg

from ._base import SurvchartCommand


class Command(SurvchartCommand):
    help = 'Renders a chart or funnel plot-data file as SVG'

    def add_command_arguments(self, parser):
        parser.add_argument('--chart', required=True, help='Chart CSV/JSON or funnel plot-data CSV')
        parser.add_argument('--out', required=True, help='SVG output path')
        parser.add_argument('--h', type=float, help='Control limit line')
        parser.add_argument('--title', help='Plot title')
        parser.add_argument('--kind', help='Chart kind for CSV files without a metadata line')

    def run(self, **options):
        path = options['chart']
        if str(path).lower().endswith('.csv') and is_funnel_plot_csv(path):
            svg = funnel_svg(import_funnel_plot_csv(path), title=options['title'] or 'Funnel plot')
        else:
            chart = load_chart(path, kind=options['kind'])
            svg = chart_svg(chart, h=options['h'], title=options['title'])
        write_svg(svg, options['out'])
        if options['json']:
            self.write_json({'out': options['out']})
            return
        self.stdout.write(self.style.SUCCESS(f"Plot written to {options['out']}"))
