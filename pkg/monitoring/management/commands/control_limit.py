"""
Control limit by simulating in-control units.
Run with: survchart control-limit --kind bk --time 365 --alpha 0.05 --psi 1 --theta 0.6931 \
    --model cox.json --baseline data.csv --n-sim 200 --seed 1
"""
from django.conf import settings

from monitoring.choices import LimitKind
from monitoring.controllimit import SimConfig, control_limit, in_control_signal_fraction
from monitoring.serializers import control_limit_to_dict, dump_json

from ._base import SurvchartCommand


class Command(SurvchartCommand):
    help = 'Determines h so that at most a fraction alpha of in-control units signal within time'
    uses_seed = True

    def add_command_arguments(self, parser):
        parser.add_argument('--kind', required=True, choices=LimitKind.values)
        parser.add_argument('--time', type=float, required=True, help='Monitoring horizon')
        parser.add_argument('--psi', type=float, required=True, help='Arrival rate (patients per time unit)')
        parser.add_argument('--alpha', type=float, default=settings.SURVCHART_DEFAULTS['alpha'])
        parser.add_argument('--model', help='Risk model JSON (logistic for bernoulli, Cox for bk/cgr)')
        parser.add_argument('--baseline', help='Dataset CSV to resample covariates from')
        parser.add_argument('--theta', type=float, default=settings.SURVCHART_DEFAULTS['theta'])
        parser.add_argument('--followup', type=float, help='Followup window C (bernoulli)')
        parser.add_argument('--p0', type=float, help='Baseline probability without a model (bernoulli)')
        parser.add_argument('--p1', type=float, help='Alternative probability (bernoulli)')
        parser.add_argument('--maxtheta', type=float, default=settings.SURVCHART_DEFAULTS['maxtheta'])
        parser.add_argument('--n-sim', type=int, help='Simulated units (default: 200, 20 for cgr)')
        parser.add_argument('--h-precision', type=int, default=settings.SURVCHART_DEFAULTS['h_precision'])
        parser.add_argument('--verify', type=int, default=0,
                            help='Check the limit on this many fresh in-control units')
        parser.add_argument('--out', help='Result JSON output path')
        self.add_schema_arguments(parser)

    def run(self, **options):
        kind = LimitKind(options['kind'])
        model = self.load_model(options['model']) if options['model'] else None
        baseline = self.load_data(options['baseline'], options) if options['baseline'] else None
        followup = options['followup']
        if kind == LimitKind.BERNOULLI and followup is None:
            followup = getattr(model, 'followup', None)
        theta = options['theta'] if options['p1'] is None else None

        config = SimConfig(
            time=options['time'], psi=options['psi'], model=model, baseline_data=baseline,
            alpha=options['alpha'], n_sim=options['n_sim'], h_precision=options['h_precision'],
            seed=options['seed'], theta=theta, followup=followup, p0=options['p0'],
            p1=options['p1'], maxtheta=options['maxtheta'],
        )
        n_sim = config.n_sim_for(kind)
        if kind == LimitKind.CGR and n_sim <= settings.SURVCHART_DEFAULTS['cgr_low_n_sim']:
            self.stderr.write(self.style.WARNING(
                f"Only {n_sim} simulated units: the CGR control limit is unreliable, consider --n-sim 100 or more"
            ))

        workers = self.workers(options)
        progress = self.progress_callback(options)
        result = control_limit(kind, config, workers=workers, progress=progress)
        document = control_limit_to_dict(result)

        if options['verify']:
            fraction = in_control_signal_fraction(
                kind, config, result.h, options['verify'], seed=options['seed'] + 1,
                workers=workers, progress=progress,
            )
            document['verification'] = {'n_units': options['verify'], 'signal_fraction': fraction}

        if options['out']:
            dump_json(document, options['out'])
            self.stderr.write(self.style.SUCCESS(f"Result written to {options['out']}"))
        if options['json']:
            self.write_json(document)
            return
        self.stdout.write(f"h: {result.h!r}")
        self.stdout.write(f"achieved alpha: {result.achieved_alpha!r} ({result.n_sim} units)")
        if 'verification' in document:
            self.stdout.write(f"fresh signal fraction: {document['verification']['signal_fraction']!r}")
