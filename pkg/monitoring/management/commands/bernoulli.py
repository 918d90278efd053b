"""
Risk-adjusted Bernoulli CUSUM for one unit.
Run with: survchart bernoulli --data data.csv --unit 9 --model glm.json --theta 0.6931 --followup 30 --out chart.csv
"""
from django.conf import settings

from monitoring.bernoulli import BernoulliSpec, bernoulli_cusum
from monitoring.chartcore import runlength
from monitoring.serializers import chart_to_dict

from ._base import SurvchartCommand


class Command(SurvchartCommand):
    help = 'Builds a Bernoulli CUSUM (model + theta, p0 + theta or p0 + p1)'

    def add_command_arguments(self, parser):
        parser.add_argument('--data', required=True, help='Dataset CSV')
        parser.add_argument('--unit', help='Unit to chart (required when the data holds several)')
        parser.add_argument('--model', help='Logistic or manual model JSON')
        parser.add_argument('--theta', type=float, help='Log odds ratio to detect (default ln 2 unless --p1 is given)')
        parser.add_argument('--p0', type=float, help='Baseline failure probability')
        parser.add_argument('--p1', type=float, help='Alternative failure probability')
        parser.add_argument('--followup', type=float, help='Followup window C (default: model followup or 30)')
        parser.add_argument('--stoptime', type=float, help='Only patients with outcome known by this time')
        parser.add_argument('--h', type=float, help='Control limit; stops at the first crossing')
        parser.add_argument('--out', help='Chart output (.csv or .json)')
        self.add_schema_arguments(parser)

    def run(self, **options):
        data = self.unit_data(self.load_data(options['data'], options), options['unit'])
        model = self.load_model(options['model']) if options['model'] else None
        followup = options['followup']
        if followup is None:
            followup = getattr(model, 'followup', None) or 30.0
        theta = options['theta']
        if theta is None and options['p1'] is None:
            theta = settings.SURVCHART_DEFAULTS['theta']

        spec = BernoulliSpec(
            theta=theta, p0=options['p0'], p1=options['p1'],
            followup=followup, model=model,
        )
        chart = bernoulli_cusum(data, spec, stoptime=options['stoptime'], h=options['h'])
        if options['h'] is not None:
            chart = chart.with_limit(options['h'])
        if options['out']:
            self.write_chart(chart, options['out'])

        if options['json']:
            document = chart_to_dict(chart)
            if options['h'] is not None:
                document['runlength'] = self.format_number(runlength(chart, options['h']))
            self.write_json(document)
            return
        self.stdout.write(f"points: {len(chart)}")
        if len(chart):
            self.stdout.write(f"last: {chart.times[-1]!r} {chart.values[-1]!r}")
        if options['h'] is not None:
            self.stdout.write(f"runlength: {self.format_number(runlength(chart, options['h']))}")
