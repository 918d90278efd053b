"""
Fit the logistic risk-adjustment model for discrete time charts.
Run with: survchart fit-glm --data baseline.csv --covariates age,sex,BMI --followup 30 --out glm.json
"""
from monitoring.riskadjust import fit_logistic
from monitoring.serializers import dump_json, model_to_dict

from ._base import SurvchartCommand, name_list


class Command(SurvchartCommand):
    help = 'Fits a logistic model for failure within the followup window'

    def add_command_arguments(self, parser):
        parser.add_argument('--data', required=True, help='Dataset CSV')
        parser.add_argument('--covariates', type=name_list, default=[], help='Comma-separated covariates')
        parser.add_argument('--followup', type=float, default=30.0, help='Followup window C (default: 30)')
        parser.add_argument('--out', help='Model JSON output path')
        self.add_schema_arguments(parser)

    def run(self, **options):
        data = self.load_data(options['data'], options)
        model = fit_logistic(data, options['covariates'], options['followup'])
        document = model_to_dict(model)
        if options['out']:
            dump_json(document, options['out'])
            self.stderr.write(self.style.SUCCESS(f"Model written to {options['out']}"))
        if options['json']:
            self.write_json(document)
            return

        self.stdout.write(f"intercept: {model.intercept!r}")
        for name, value in model.coefficients.items():
            self.stdout.write(f"{name}: {value!r}")
        self.stdout.write(f"p0_marginal: {model.p0_marginal!r}")
        if not model.converged:
            self.stderr.write(self.style.WARNING('IRLS did not converge'))
