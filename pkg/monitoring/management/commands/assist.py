"""
Assisted workflow: fit models on baseline data and collect chart parameters.
Run with: survchart assist --baseline year1.csv --data unit1.csv --covariates age,sex,BMI \
    --followup 30 --time 365 --out bundle.json [--run --unit 1]
"""
from django.conf import settings

from monitoring.assist import parameter_assist, run_workflow
from monitoring.serializers import bundle_to_dict, dump_json, workflow_to_dict

from ._base import SurvchartCommand, name_list


class Command(SurvchartCommand):
    help = 'Fits risk models on baseline data and gathers the parameters for every chart'
    uses_seed = True

    def add_command_arguments(self, parser):
        parser.add_argument('--baseline', required=True, help='Baseline (in-control) dataset CSV')
        parser.add_argument('--data', required=True, help='Dataset CSV to monitor')
        parser.add_argument('--covariates', type=name_list,
                            help='Risk-adjustment covariates (omit for no risk adjustment)')
        parser.add_argument('--followup', type=float, help='Followup window C (needed for Bernoulli charts)')
        parser.add_argument('--theta', type=float, default=settings.SURVCHART_DEFAULTS['theta'])
        parser.add_argument('--time', type=float, help='Control limit horizon (default: last baseline entry)')
        parser.add_argument('--alpha', type=float, default=settings.SURVCHART_DEFAULTS['alpha'])
        parser.add_argument('--maxtheta', type=float, default=settings.SURVCHART_DEFAULTS['maxtheta'])
        parser.add_argument('--out', help='Bundle JSON output path')
        parser.add_argument('--run', action='store_true',
                            help='Also compute control limits, charts and run lengths')
        parser.add_argument('--unit', help='Unit of --data to monitor with --run')
        parser.add_argument('--n-sim', type=int, help='Simulated units per control limit')
        self.add_schema_arguments(parser)

    def run(self, **options):
        baseline = self.load_data(options['baseline'], options)
        data = self.load_data(options['data'], options)
        bundle = parameter_assist(
            baseline, data,
            covariates=options['covariates'],
            followup=options['followup'],
            theta=options['theta'],
            time=options['time'],
            alpha=options['alpha'],
            maxtheta=options['maxtheta'],
        )
        document = bundle_to_dict(bundle)

        if options['run']:
            steps = run_workflow(
                bundle, unit=options['unit'], n_sim=options['n_sim'], seed=options['seed'],
                workers=self.workers(options), progress=self.progress_callback(options),
            )
            document['workflow'] = workflow_to_dict(steps)

        if options['out']:
            dump_json(document, options['out'])
            self.stderr.write(self.style.SUCCESS(f"Bundle written to {options['out']}"))
        if options['json']:
            self.write_json(document)
            return

        self.stdout.write(f"psi: {bundle.psi!r}")
        self.stdout.write(f"time: {bundle.time!r}")
        self.stdout.write(f"p0: {bundle.p0!r}")
        self.stdout.write(f"models: glm={'yes' if bundle.glm_model else 'no'} cox={'yes' if bundle.cox_model else 'no'}")
        for step in document.get('workflow', []):
            self.stdout.write(f"{step['kind']}: h={step['h']!r} runlength={step['runlength']}")
