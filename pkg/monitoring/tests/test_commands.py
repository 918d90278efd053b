import io
import json
import math
import os
import shutil
import tempfile
from unittest import mock

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from monitoring.datagen import COVARIATE_COLUMNS
from monitoring.dataset import Schema, load_dataset
from monitoring.riskadjust import CoxModel
from monitoring.serializers import load_model
from survchart import cli


def run(name, *args):
    """Run a command and return (stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    call_command(name, *args, stdout=out, stderr=err)
    return out.getvalue(), err.getvalue()


class CommandTestCase(SimpleTestCase):
    """Shares one simulated dataset and fitted Cox model across the command tests."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmp = tempfile.mkdtemp()
        cls.data_path = cls.path('data.csv')
        cls.cox_path = cls.path('cox.json')
        run('simulate', '--out', cls.data_path, '--n-units', '3', '--entry-horizon', '100',
            '--seed', '7', '--workers', '1')
        run('fit_cox', '--data', cls.data_path, '--covariates', 'age,sex,BMI', '--out', cls.cox_path)

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmp, ignore_errors=True)
        super().tearDownClass()

    @classmethod
    def path(cls, name):
        return os.path.join(cls.tmp, name)

    def write(self, name, text):
        path = self.path(name)
        with open(path, 'w', encoding='utf-8') as handle:
            handle.write(text)
        return path


class ModelCommandTests(CommandTestCase):

    def test_simulate(self):
        out, _ = run('simulate', '--out', self.path('sim.csv'), '--n-units', '2',
                     '--entry-horizon', '50', '--seed', '3', '--workers', '1', '--json')
        document = json.loads(out)
        self.assertEqual(document['units'], 2)
        self.assertEqual(sorted(document['thetas']), ['1', '2'])
        data = load_dataset(self.path('sim.csv'), Schema(covariates=None))
        self.assertEqual(len(data), document['records'])
        self.assertEqual(data.covariate_names, COVARIATE_COLUMNS)

    def test_fit_cox(self):
        model = load_model(self.cox_path)
        self.assertIsInstance(model, CoxModel)
        self.assertEqual(set(model.coefficients), {'age', 'sex', 'BMI'})

    def test_fit_glm(self):
        out, _ = run('fit_glm', '--data', self.data_path, '--covariates', 'age,sex', '--followup', '30', '--json')
        document = json.loads(out)
        self.assertEqual(document['kind'], 'logistic')
        self.assertEqual(set(document['coefficients']), {'age', 'sex'})
        self.assertEqual(document['followup'], 30.0)


class ChartCommandTests(CommandTestCase):

    def test_bk_and_runlength(self):
        chart_path = self.path('bk.csv')
        out, _ = run('bk', '--data', self.data_path, '--unit', '1', '--model', self.cox_path,
                     '--theta', '0.6931', '--h', '2', '--out', chart_path, '--json')
        document = json.loads(out)
        self.assertEqual(document['kind'], 'bk')
        self.assertEqual(document['h'], 2.0)

        out, _ = run('runlength', '--chart', chart_path, '--h', '2')
        self.assertEqual(out.strip(), document['runlength'])

    def test_two_sided_bk(self):
        out, _ = run('bk', '--data', self.data_path, '--unit', '2', '--model', self.cox_path,
                     '--theta', '0.6931', '--twosided', '--json')
        document = json.loads(out)
        self.assertEqual(document['kind'], 'pair')
        self.assertEqual(document['lower']['kind'], 'bk_lower')

    def test_cgr(self):
        out, _ = run('cgr', '--data', self.data_path, '--unit', '1', '--model', self.cox_path,
                     '--ctimes', '25,50,75', '--workers', '1', '--json')
        document = json.loads(out)
        self.assertEqual(document['kind'], 'cgr')
        self.assertTrue(all('theta_hat' in point for point in document['points']))
        times = [point['t'] for point in document['points']]
        self.assertIn(75.0, times)

    def test_bernoulli(self):
        out, _ = run('bernoulli', '--data', self.data_path, '--unit', '3', '--p0', '0.4',
                     '--theta', '0.6931', '--followup', '30', '--json')
        document = json.loads(out)
        self.assertEqual(document['kind'], 'bernoulli')
        self.assertTrue(document['points'])

    def test_bernoulli_model_defaults_theta(self):
        glm_path = self.path('glm.json')
        run('fit_glm', '--data', self.data_path, '--covariates', 'age,sex', '--followup', '30',
            '--out', glm_path)
        common = ('bernoulli', '--data', self.data_path, '--unit', '1', '--model', glm_path, '--json')
        defaulted, _ = run(*common)
        explicit, _ = run(*common, '--theta', repr(math.log(2)))
        self.assertEqual(json.loads(defaulted), json.loads(explicit))

    def test_plot(self):
        chart_path = self.path('plot-bk.json')
        run('bk', '--data', self.data_path, '--unit', '1', '--model', self.cox_path,
            '--theta', '0.6931', '--out', chart_path)
        svg_path = self.path('bk.svg')
        run('plot', '--chart', chart_path, '--out', svg_path, '--h', '3')
        with open(svg_path, encoding='utf-8') as handle:
            self.assertIn('<svg', handle.read())


class WorkflowCommandTests(CommandTestCase):

    def test_control_limit(self):
        out, err = run('control_limit', '--kind', 'bk', '--time', '100', '--psi', '1',
                       '--model', self.cox_path, '--baseline', self.data_path,
                       '--n-sim', '10', '--seed', '1', '--workers', '1', '--json')
        document = json.loads(out)
        self.assertEqual(document['kind'], 'bk')
        self.assertGreater(document['h'], 0)
        self.assertEqual(len(document['maxima']), 10)
        self.assertEqual(err, '')

    def test_cgr_control_limit_warns_on_few_units(self):
        _, err = run('control_limit', '--kind', 'cgr', '--time', '60', '--psi', '1',
                     '--model', self.cox_path, '--baseline', self.data_path,
                     '--n-sim', '5', '--workers', '1')
        self.assertIn('unreliable', err)

    def test_funnel(self):
        outputs = {name: self.path(name) for name in ('funnel.csv', 'plot.csv', 'funnel.svg', 'funnel.pdf')}
        out, _ = run('funnel', '--data', self.data_path, '--followup', '30',
                     '--out', outputs['funnel.csv'], '--plot-data', outputs['plot.csv'],
                     '--svg', outputs['funnel.svg'], '--report', outputs['funnel.pdf'])
        self.assertTrue(out.startswith('unit,observed,expected,numtotal,p,0.95,0.99'))
        self.assertEqual(len(out.strip().splitlines()), 4)
        with open(outputs['funnel.pdf'], 'rb') as handle:
            self.assertEqual(handle.read(4), b'%PDF')

        svg_path = self.path('from-plot-data.svg')
        run('plot', '--chart', outputs['plot.csv'], '--out', svg_path)
        self.assertTrue(os.path.getsize(svg_path) > 0)

    def test_assist_bundle(self):
        out, _ = run('assist', '--baseline', self.data_path, '--data', self.data_path,
                     '--covariates', 'age,sex,BMI', '--followup', '30', '--json')
        document = json.loads(out)
        self.assertEqual(document['glmmod']['kind'], 'logistic')
        self.assertEqual(document['coxphmod']['kind'], 'cox')
        self.assertEqual(document['call']['covariates'], ['age', 'sex', 'BMI'])
        self.assertGreater(document['psi'], 0)

    def test_assist_run(self):
        out, _ = run('assist', '--baseline', self.data_path, '--data', self.data_path,
                     '--run', '--unit', '1', '--n-sim', '5', '--seed', '2', '--workers', '1', '--json')
        document = json.loads(out)
        self.assertEqual([step['kind'] for step in document['workflow']], ['bk', 'cgr'])
        self.assertIsNone(document['glmmod'])


class CommandErrorTests(CommandTestCase):

    def test_invalid_dataset_exits_with_two(self):
        bad = self.write('bad.csv', 'entrytime,survtime\nabc,1\n')
        with self.assertRaises(CommandError) as ctx:
            run('bk', '--data', bad, '--model', self.cox_path, '--theta', '0.6931')
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn('Row 2', str(ctx.exception))

    def test_missing_unit_choice_exits_with_two(self):
        with self.assertRaises(CommandError) as ctx:
            run('bk', '--data', self.data_path, '--model', self.cox_path, '--theta', '0.6931')
        self.assertEqual(ctx.exception.returncode, 2)

    def test_missing_file_exits_with_two(self):
        with self.assertRaises(CommandError) as ctx:
            run('fit_cox', '--data', self.path('nowhere.csv'))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_model_failure_exits_with_one(self):
        collinear = self.write('collinear.csv', 'entrytime,survtime,x\n0,5,1\n1,8,1\n2,3,1\n')
        with self.assertRaises(CommandError) as ctx:
            run('fit_cox', '--data', collinear, '--covariates', 'x')
        self.assertEqual(ctx.exception.returncode, 1)
        self.assertIn('degenerate design', str(ctx.exception))


class ConsoleEntryPointTests(CommandTestCase):

    def test_usage(self):
        with mock.patch('sys.stdout', new_callable=io.StringIO) as stdout:
            self.assertEqual(cli.main(['survchart']), 0)
        self.assertIn('control-limit', stdout.getvalue())

    def test_subcommand(self):
        chart = self.write('cli-chart.csv', '# kind=bk start_time=5.0\ntime,value\n10,1.0\n20,4.5\n')
        with mock.patch('sys.stdout', new_callable=io.StringIO) as stdout:
            cli.main(['survchart', 'runlength', '--chart', chart, '--h', '4'])
        self.assertEqual(stdout.getvalue().strip(), '15.0')

    def test_hyphenated_subcommand(self):
        with mock.patch('sys.stdout', new_callable=io.StringIO) as stdout:
            cli.main(['survchart', 'fit-cox', '--data', self.data_path, '--covariates', 'age', '--json'])
        document = json.loads(stdout.getvalue())
        self.assertEqual(document['kind'], 'cox')
