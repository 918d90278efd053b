"""
Run length of a stored chart for a control limit.
Run with: survchart runlength --chart chart.csv --h 8.52
"""
from monitoring.chartcore import ChartPair, runlength
from monitoring.exports import load_chart

from ._base import SurvchartCommand


class Command(SurvchartCommand):
    help = 'Prints the time from the start of monitoring to the first crossing of h (or inf)'

    def add_command_arguments(self, parser):
        parser.add_argument('--chart', required=True, help='Chart CSV or JSON')
        parser.add_argument('--h', type=float, required=True, help='Control limit (negative for lower charts)')
        parser.add_argument('--h-lower', type=float, help='Lower limit of a two-sided chart')
        parser.add_argument('--kind', help='Chart kind for CSV files without a metadata line')
        parser.add_argument('--start-time', type=float, help='Override the chart start time')

    def run(self, **options):
        chart = load_chart(options['chart'], kind=options['kind'], start_time=options['start_time'])
        h = options['h']
        if isinstance(chart, ChartPair) and options['h_lower'] is not None:
            h = (options['h_lower'], h)
        value = runlength(chart, h)
        if options['json']:
            self.write_json({'h': options['h'], 'runlength': self.format_number(value)})
        else:
            self.stdout.write(self.format_number(value))
