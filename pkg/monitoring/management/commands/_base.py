"""
Shared plumbing for the survchart management commands.

The leading underscore keeps Django from listing this module as a command.
"""
import json
import logging

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from monitoring.dataset import Schema, load_dataset
from monitoring.exceptions import SurvchartError
from monitoring.exports import export_chart_csv
from monitoring.serializers import chart_to_dict, dump_json, load_model

logger = logging.getLogger(__name__)


def float_list(text):
    """Comma-separated floats: '30,60,90' -> [30.0, 60.0, 90.0]."""
    try:
        return [float(item) for item in text.split(',') if item.strip()]
    except ValueError:
        raise ValueError(f"expected a comma-separated list of numbers, got {text!r}") from None


def name_list(text):
    return [item.strip() for item in text.split(',') if item.strip()]


class SurvchartCommand(BaseCommand):
    """
    Base class: common flags (--json, --seed, --workers, --progress) and
    error translation. Validation errors exit with status 2, other
    runtime failures with status 1.
    """
    requires_system_checks = []
    uses_seed = False

    def add_arguments(self, parser):
        self.add_command_arguments(parser)
        parser.add_argument('--json', action='store_true', help='Write machine-readable JSON to stdout')
        if self.uses_seed:
            parser.add_argument('--seed', type=int, default=0, help='Random seed (default: 0)')
        parser.add_argument(
            '--workers', type=int, default=None,
            help='Parallel workers (default: SURVCHART_WORKERS or available parallelism)',
        )
        parser.add_argument('--progress', action='store_true', help='Report simulation progress on stderr')

    def add_command_arguments(self, parser):
        pass

    def handle(self, *args, **options):
        try:
            self.run(**options)
        except CommandError:
            raise
        except (ValueError, OSError) as e:
            raise CommandError(str(e), returncode=2) from e
        except SurvchartError as e:
            raise CommandError(str(e), returncode=1) from e

    def run(self, **options):
        raise NotImplementedError

    # -- inputs ---------------------------------------------------------------

    @staticmethod
    def add_schema_arguments(parser, prefix=''):
        parser.add_argument(f'--{prefix}entrytime-col', default='entrytime')
        parser.add_argument(f'--{prefix}survtime-col', default='survtime')
        parser.add_argument(f'--{prefix}censorid-col', default='censorid')
        parser.add_argument(f'--{prefix}unit-col', default='unit')

    def load_data(self, path, options, prefix=''):
        key = prefix.replace('-', '_')
        schema = Schema(
            entrytime=options[f'{key}entrytime_col'],
            survtime=options[f'{key}survtime_col'],
            censorid=options[f'{key}censorid_col'],
            unit=options[f'{key}unit_col'],
            covariates=None,
        )
        data = load_dataset(path, schema)
        logger.debug("Loaded %d records from %s", len(data), path)
        return data

    def unit_data(self, data, unit):
        if unit is None:
            if len(data.units()) > 1:
                raise ValueError(f"Data holds units {data.units()}; pick one with --unit")
            return data
        subset = data.for_unit(unit)
        if not len(subset):
            raise ValueError(f"Unit {unit!r} has no records")
        return subset

    def load_model(self, path):
        return load_model(path)

    def workers(self, options):
        workers = options.get('workers')
        return workers if workers is not None else settings.SURVCHART_WORKERS

    def progress_callback(self, options):
        if not options.get('progress'):
            return None

        def report(done, total):
            self.stderr.write(f"\r{done}/{total} units", ending='')
            if done == total:
                self.stderr.write('')
        return report

    # -- outputs --------------------------------------------------------------

    def write_json(self, document):
        self.stdout.write(json.dumps(document, indent=2))

    def write_chart(self, chart, path):
        if str(path).lower().endswith('.json'):
            dump_json(chart_to_dict(chart), path)
        else:
            export_chart_csv(chart, path)
        self.stderr.write(self.style.SUCCESS(f"Chart written to {path}"))

    @staticmethod
    def format_number(value):
        return 'inf' if value == float('inf') else repr(value)
