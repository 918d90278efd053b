"""
Generate the simulated multi-unit surgery dataset.
Run with: survchart simulate --seed 7 --out data.csv
"""
from monitoring.datagen import GenConfig, generate_surgery_data, true_thetas
from monitoring.dataset import serialize_dataset
from monitoring.serializers import dump_json

from ._base import SurvchartCommand, float_list


class Command(SurvchartCommand):
    help = 'Generates surgery data from a Cox model with exponential baseline hazard'
    uses_seed = True

    def add_command_arguments(self, parser):
        parser.add_argument('--out', required=True, help='Dataset CSV output path')
        parser.add_argument('--n-units', type=int, default=45)
        parser.add_argument('--psi-levels', type=float_list, default=[0.5, 1.0, 1.5],
                            help='Arrival rates, one block of units each')
        parser.add_argument('--entry-horizon', type=float, default=730.0)
        parser.add_argument('--baseline-rate', type=float, default=0.01)
        parser.add_argument('--theta-sd', type=float, default=0.4)
        parser.add_argument('--theta', type=float, help='Fixed log hazard ratio for every unit')
        parser.add_argument('--followup-cap', type=float, help='Administrative censoring after this follow-up')
        parser.add_argument('--thetas-out', help='JSON file with the drawn per-unit theta')

    def run(self, **options):
        config = GenConfig(
            n_units=options['n_units'],
            psi_levels=tuple(options['psi_levels']),
            entry_horizon=options['entry_horizon'],
            baseline_rate=options['baseline_rate'],
            theta_sd=options['theta_sd'],
            fixed_theta=options['theta'],
            followup_cap=options['followup_cap'],
            seed=options['seed'],
        )
        data = generate_surgery_data(config, workers=self.workers(options))
        with open(options['out'], 'w', encoding='utf-8', newline='') as handle:
            serialize_dataset(data, handle)

        thetas = true_thetas(config)
        if options['thetas_out']:
            dump_json(thetas, options['thetas_out'])
        if options['json']:
            self.write_json({'records': len(data), 'units': config.n_units, 'seed': config.seed,
                             'thetas': thetas})
            return
        self.stdout.write(self.style.SUCCESS(
            f"{len(data)} patients in {config.n_units} units written to {options['out']}"
        ))
