"""
BK-CUSUM for one unit.
Run with: survchart bk --data data.csv --unit 9 --model cox.json --theta 0.6931 --out chart.csv
"""
from monitoring.bkcusum import BKSpec, bk_cusum
from monitoring.chartcore import runlength
from monitoring.serializers import chart_to_dict

from ._base import SurvchartCommand, float_list


class Command(SurvchartCommand):
    help = 'Builds a BK-CUSUM (upper, lower for negative theta, or two-sided)'

    def add_command_arguments(self, parser):
        parser.add_argument('--data', required=True, help='Dataset CSV')
        parser.add_argument('--unit', help='Unit to chart (required when the data holds several)')
        parser.add_argument('--model', required=True, help='Cox or manual model JSON with a baseline')
        parser.add_argument('--theta', type=float, required=True, help='Log hazard ratio theta1 (nonzero)')
        parser.add_argument('--ctimes', type=float_list, help='Extra evaluation times, comma-separated')
        parser.add_argument('--C', dest='C', type=float, help='Outcome truncation window')
        parser.add_argument('--stoptime', type=float, help='Last evaluation time')
        parser.add_argument('--twosided', action='store_true', help='Build upper and lower charts')
        parser.add_argument('--h', type=float, help='Control limit; stops at the first crossing')
        parser.add_argument('--h-lower', type=float, help='Lower limit of a two-sided chart (default: -h)')
        parser.add_argument('--out', help='Chart output (.csv or .json)')
        self.add_schema_arguments(parser)

    def run(self, **options):
        data = self.unit_data(self.load_data(options['data'], options), options['unit'])
        spec = BKSpec(
            theta1=options['theta'],
            model=self.load_model(options['model']),
            ctimes=options['ctimes'],
            C=options['C'],
            stoptime=options['stoptime'],
            twosided=options['twosided'],
        )
        h = options['h']
        if h is not None and options['twosided']:
            h = (options['h_lower'] if options['h_lower'] is not None else -abs(h), abs(h))
        chart = bk_cusum(data, spec, h=h)
        if h is not None and not options['twosided']:
            chart = chart.with_limit(h)
        if options['out']:
            self.write_chart(chart, options['out'])

        rl = self.format_number(runlength(chart, h)) if h is not None else None
        if options['json']:
            document = chart_to_dict(chart)
            if rl is not None:
                document['runlength'] = rl
            self.write_json(document)
            return
        self.stdout.write(f"grid times: {len(chart.upper if spec.twosided else chart)}")
        if rl is not None:
            self.stdout.write(f"runlength: {rl}")
