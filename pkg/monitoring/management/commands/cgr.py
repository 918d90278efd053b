"""
CGR-CUSUM for one unit.
Run with: survchart cgr --data data.csv --unit 9 --model cox.json --out chart.csv
"""
from monitoring.cgrcusum import CGRSpec, cgr_cusum
from monitoring.chartcore import runlength
from monitoring.choices import CGRMethod
from monitoring.serializers import chart_to_dict

from ._base import SurvchartCommand, float_list


class Command(SurvchartCommand):
    help = 'Builds a CGR-CUSUM with the running hazard ratio estimate'

    def add_command_arguments(self, parser):
        parser.add_argument('--data', required=True, help='Dataset CSV')
        parser.add_argument('--unit', help='Unit to chart (required when the data holds several)')
        parser.add_argument('--model', required=True, help='Cox or manual model JSON with a baseline')
        parser.add_argument('--maxtheta', type=float, default=6.0, help='Cap on the estimated hazard ratio')
        parser.add_argument('--ctimes', type=float_list, help='Extra evaluation times, comma-separated')
        parser.add_argument('--C', dest='C', type=float, help='Outcome truncation window')
        parser.add_argument('--stoptime', type=float, help='Last evaluation time')
        parser.add_argument('--method', choices=CGRMethod.values, default=CGRMethod.MATRIX)
        parser.add_argument('--h', type=float, help='Control limit; stops at the first crossing')
        parser.add_argument('--out', help='Chart output (.csv or .json)')
        self.add_schema_arguments(parser)

    def run(self, **options):
        data = self.unit_data(self.load_data(options['data'], options), options['unit'])
        spec = CGRSpec(
            model=self.load_model(options['model']),
            ctimes=options['ctimes'],
            maxtheta=options['maxtheta'],
            C=options['C'],
            stoptime=options['stoptime'],
            method=options['method'],
        )
        chart = cgr_cusum(data, spec, h=options['h'], workers=self.workers(options))
        if options['h'] is not None:
            chart = chart.with_limit(options['h'])
        if options['out']:
            self.write_chart(chart, options['out'])

        rl = self.format_number(runlength(chart, options['h'])) if options['h'] is not None else None
        if options['json']:
            document = chart_to_dict(chart)
            if rl is not None:
                document['runlength'] = rl
            self.write_json(document)
            return
        self.stdout.write(f"grid times: {len(chart)}")
        if rl is not None:
            self.stdout.write(f"runlength: {rl}")
