import numpy as np
from django.test import SimpleTestCase

from monitoring.choices import Classification
from monitoring.exceptions import DataValidationError
from monitoring.funnel import classify, funnel_bounds, funnel_plot_data, funnel_summary
from monitoring.riskadjust import ManualModel

from .factories import make_dataset


def unit_rows(unit, failures, total, entry=0.0):
    """``total`` patients of ``unit``, the first ``failures`` failing within 30 days."""
    return [(entry + i, 10.0 if i < failures else 100.0, 1, unit) for i in range(total)]


class FunnelBoundsTests(SimpleTestCase):

    def test_reference_bounds(self):
        lower, upper = funnel_bounds(0.5, 100, 0.95)
        self.assertAlmostEqual(lower, 0.402, places=3)
        self.assertAlmostEqual(upper, 0.598, places=3)

        lower, upper = funnel_bounds(0.2, 25, 0.95)
        self.assertAlmostEqual(lower, 0.04320, places=5)
        self.assertAlmostEqual(upper, 0.35680, places=5)

    def test_zero_confidence_collapses_to_p0(self):
        self.assertEqual(funnel_bounds(0.3, 10, 0.0), (0.3, 0.3))

    def test_bounds_are_clamped(self):
        lower, upper = funnel_bounds(0.01, 1, 0.99)
        self.assertEqual(lower, 0.0)
        lower, upper = funnel_bounds(0.99, 1, 0.99)
        self.assertEqual(upper, 1.0)

    def test_bounds_narrow_with_n(self):
        widths = [np.subtract(*funnel_bounds(0.2, n, 0.95)[::-1]) for n in (10, 50, 200)]
        self.assertEqual(widths, sorted(widths, reverse=True))

    def test_invalid_arguments(self):
        for args in ((0.0, 10, 0.95), (0.5, 0, 0.95), (0.5, 10, 1.0), (0.5, 10, -0.1)):
            with self.assertRaises(DataValidationError):
                funnel_bounds(*args)

    def test_classify_on_the_bound_is_in_control(self):
        lower, upper = funnel_bounds(0.5, 100, 0.95)
        self.assertEqual(classify(upper, 0.5, 100, 0.95), Classification.IN_CONTROL)
        self.assertEqual(classify(upper + 1e-9, 0.5, 100, 0.95), Classification.WORSE)
        self.assertEqual(classify(lower - 1e-9, 0.5, 100, 0.95), Classification.BETTER)


class FunnelSummaryTests(SimpleTestCase):

    def test_model_free_pooled_p0(self):
        data = make_dataset(unit_rows('A', 10, 100) + unit_rows('B', 30, 100))
        summary = funnel_summary(data, followup=30)
        self.assertAlmostEqual(summary.p0, 0.2)
        a, b = summary.row('A'), summary.row('B')
        self.assertEqual((a.observed, a.numtotal), (10, 100))
        self.assertAlmostEqual(a.p, 0.1)
        self.assertAlmostEqual(b.p, 0.3)
        self.assertEqual(a.classifications[0.95], Classification.BETTER)
        self.assertEqual(b.classifications[0.95], Classification.WORSE)
        # Pooled observed failures match the pooled expectation
        self.assertAlmostEqual(sum(r.observed for r in summary.rows),
                               summary.p0 * sum(r.numtotal for r in summary.rows))

    def test_single_unit_is_in_control(self):
        summary = funnel_summary(make_dataset(unit_rows('A', 7, 40)), followup=30)
        row = summary.row('A')
        self.assertAlmostEqual(row.p, summary.p0)
        self.assertTrue(all(c == Classification.IN_CONTROL for c in row.classifications.values()))

    def test_risk_adjusted_expectation(self):
        model = ManualModel(intercept=0.0, followup=30.0)
        data = make_dataset(unit_rows('A', 60, 100))
        summary = funnel_summary(data, model=model, followup=30, p0=0.5)
        row = summary.row('A')
        self.assertAlmostEqual(row.expected, 50.0)
        self.assertAlmostEqual(row.p, 60 / 50 * 0.5)
        self.assertEqual(row.classifications[0.95], Classification.WORSE)
        self.assertEqual(row.classifications[0.99], Classification.IN_CONTROL)

    def test_no_failures_signals_better(self):
        data = make_dataset(unit_rows('A', 0, 100))
        row = funnel_summary(data, followup=30, p0=0.5).row('A')
        self.assertEqual(row.p, 0.0)
        self.assertEqual(row.classifications[0.99], Classification.BETTER)

    def test_ctime_keeps_closed_windows(self):
        data = make_dataset(unit_rows('A', 5, 20) + [(95.0, 10.0, 1, 'A')])
        summary = funnel_summary(data, followup=30, ctime=60)
        self.assertEqual(summary.row('A').numtotal, 20)
        self.assertEqual(summary.ctime, 60)

    def test_rows_sorted_by_unit(self):
        data = make_dataset(unit_rows('10', 2, 10) + unit_rows('2', 3, 10) + unit_rows('9', 1, 10))
        summary = funnel_summary(data, followup=30)
        self.assertEqual([r.unit for r in summary.rows], ['2', '9', '10'])

    def test_worse_is_monotone_in_observed(self):
        p0 = 0.2
        levels = {Classification.BETTER: 0, Classification.IN_CONTROL: 1, Classification.WORSE: 2}
        ranks = []
        for failures in range(0, 41, 4):
            data = make_dataset(unit_rows('A', failures, 40))
            row = funnel_summary(data, followup=30, p0=p0).row('A')
            ranks.append(levels[row.classifications[0.95]])
        self.assertEqual(ranks, sorted(ranks))

    def test_invalid_inputs(self):
        with self.assertRaises(DataValidationError):
            funnel_summary(make_dataset([]), followup=30)
        with self.assertRaises(DataValidationError):
            funnel_summary(make_dataset(unit_rows('A', 0, 10)), followup=30)
        with self.assertRaises(DataValidationError):
            funnel_summary(make_dataset(unit_rows('A', 2, 10)), followup=0)

    def test_plot_data(self):
        data = make_dataset(unit_rows('A', 10, 100) + unit_rows('B', 30, 50))
        summary = funnel_summary(data, followup=30)
        plot = funnel_plot_data(summary, n_points=50)
        self.assertEqual([p[0] for p in plot['points']], ['A', 'B'])
        self.assertEqual(set(plot['curves']), {0.95, 0.99})
        curve = plot['curves'][0.95]
        self.assertEqual(curve[0][0], 1.0)
        self.assertEqual(curve[-1][0], 100.0)
        for n, lower, upper in curve:
            self.assertLessEqual(lower, summary.p0)
            self.assertGreaterEqual(upper, summary.p0)
