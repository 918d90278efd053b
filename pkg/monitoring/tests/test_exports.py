import io
import os
import tempfile

from django.test import SimpleTestCase

from monitoring.chartcore import Chart, ChartPair
from monitoring.choices import ChartKind
from monitoring.exceptions import DataValidationError
from monitoring.exports import (
    export_chart_csv, export_funnel_csv, export_funnel_plot_csv, import_chart_csv,
    import_funnel_plot_csv, is_funnel_plot_csv, load_chart,
)
from monitoring.funnel import funnel_plot_data, funnel_summary
from monitoring.serializers import chart_to_dict, dump_json

from .factories import make_dataset


class ChartCSVTests(SimpleTestCase):

    def test_metadata_line(self):
        chart = Chart(ChartKind.BK, [10.0, 12.5], [0.5, 3.25], start_time=2.0, h=3.0)
        text = export_chart_csv(chart)
        lines = text.splitlines()
        self.assertEqual(lines[0], '# kind=bk start_time=2.0 h=3.0')
        self.assertEqual(lines[1], 'time,value')
        self.assertEqual(lines[2], '10.0,0.5')
        self.assertEqual(import_chart_csv(io.StringIO(text)), chart)

    def test_cgr_columns(self):
        chart = Chart(ChartKind.CGR, [1.0, 2.0], [0.0, 0.9], theta_hat=[0.0, 1.1])
        text = export_chart_csv(chart)
        self.assertIn('time,value,theta_hat', text)
        self.assertEqual(import_chart_csv(io.StringIO(text)), chart)

    def test_kind_inference_without_metadata(self):
        self.assertEqual(import_chart_csv(io.StringIO('time,value\n1,0.5\n')).kind, ChartKind.BK)
        self.assertEqual(import_chart_csv(io.StringIO('time,value\n1,-0.5\n')).kind, ChartKind.BK_LOWER)
        chart = import_chart_csv(io.StringIO('time,value,theta_hat\n1,0.5,0.3\n'))
        self.assertEqual(chart.kind, ChartKind.CGR)
        self.assertEqual(chart.start_time, 0.0)

    def test_explicit_arguments_override_metadata(self):
        text = '# kind=bk start_time=2.0\ntime,value\n5,0.5\n'
        chart = import_chart_csv(io.StringIO(text), kind='bernoulli', start_time=4.0)
        self.assertEqual(chart.kind, ChartKind.BERNOULLI)
        self.assertEqual(chart.start_time, 4.0)

    def test_pair(self):
        pair = ChartPair(Chart(ChartKind.BK, [1.0, 2.0], [0.4, 0.0]),
                         Chart(ChartKind.BK_LOWER, [1.0, 2.0], [0.0, -0.3]))
        text = export_chart_csv(pair)
        self.assertTrue(text.startswith('# kind=pair'))
        self.assertEqual(import_chart_csv(io.StringIO(text)), pair)

    def test_bad_files(self):
        with self.assertRaises(DataValidationError):
            import_chart_csv(io.StringIO('when,value\n1,2\n'))
        with self.assertRaises(DataValidationError) as ctx:
            import_chart_csv(io.StringIO('time,value\n1,0.5\n2,abc\n'))
        self.assertEqual(ctx.exception.rows, [3])

    def test_load_chart_by_extension(self):
        chart = Chart(ChartKind.BK, [1.0], [0.5])
        with tempfile.TemporaryDirectory() as tmp:
            csv_path = os.path.join(tmp, 'chart.csv')
            json_path = os.path.join(tmp, 'chart.json')
            export_chart_csv(chart, csv_path)
            dump_json(chart_to_dict(chart), json_path)
            self.assertEqual(load_chart(csv_path), chart)
            self.assertEqual(load_chart(json_path), chart)


class FunnelCSVTests(SimpleTestCase):

    def setUp(self):
        rows = [(float(i), 10.0 if i < 5 else 100.0, 1, 'A') for i in range(100)]
        rows += [(float(i), 10.0 if i < 35 else 100.0, 1, 'B') for i in range(100)]
        self.summary = funnel_summary(make_dataset(rows), followup=30)

    def test_summary_table(self):
        lines = export_funnel_csv(self.summary).splitlines()
        self.assertEqual(lines[0], 'unit,observed,expected,numtotal,p,0.95,0.99')
        self.assertTrue(lines[1].startswith('A,5,'))
        self.assertTrue(lines[1].endswith(',better,better'))
        self.assertTrue(lines[2].endswith(',worse,worse'))

    def test_plot_data(self):
        plot = funnel_plot_data(self.summary, n_points=20)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'plot.csv')
            export_funnel_plot_csv(plot, path)
            self.assertTrue(is_funnel_plot_csv(path))
            loaded = import_funnel_plot_csv(path)
        self.assertEqual([p[0] for p in loaded['points']], ['A', 'B'])
        self.assertEqual(sorted(loaded['curves']), [0.95, 0.99])
        self.assertEqual(len(loaded['curves'][0.95]), 20)
        self.assertAlmostEqual(loaded['p0'], self.summary.p0)

    def test_not_plot_data(self):
        with self.assertRaises(DataValidationError):
            import_funnel_plot_csv(io.StringIO(export_funnel_csv(self.summary)))
