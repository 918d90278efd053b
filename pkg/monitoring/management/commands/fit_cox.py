"""
Fit the Cox proportional hazards model for continuous time charts.
Run with: survchart fit-cox --data baseline.csv --covariates age,sex,BMI --out cox.json
"""
from monitoring.riskadjust import fit_coxph
from monitoring.serializers import dump_json, model_to_dict

from ._base import SurvchartCommand, name_list


class Command(SurvchartCommand):
    help = 'Fits a Cox model with Breslow baseline hazard'

    def add_command_arguments(self, parser):
        parser.add_argument('--data', required=True, help='Dataset CSV')
        parser.add_argument('--covariates', type=name_list, default=[], help='Comma-separated covariates')
        parser.add_argument('--out', help='Model JSON output path')
        self.add_schema_arguments(parser)

    def run(self, **options):
        data = self.load_data(options['data'], options)
        model = fit_coxph(data, options['covariates'])
        document = model_to_dict(model)
        if options['out']:
            dump_json(document, options['out'])
            self.stderr.write(self.style.SUCCESS(f"Model written to {options['out']}"))
        if options['json']:
            self.write_json(document)
            return

        for name, value in model.coefficients.items():
            self.stdout.write(f"{name}: {value!r}")
        self.stdout.write(f"baseline steps: {len(model.baseline.times)}")
