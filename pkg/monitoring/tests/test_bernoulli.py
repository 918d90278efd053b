import math

import numpy as np
from django.test import SimpleTestCase

from monitoring.bernoulli import BernoulliSpec, bernoulli_cusum, bernoulli_weight, indeterminate_outcomes
from monitoring.choices import ChartKind
from monitoring.exceptions import DataValidationError
from monitoring.riskadjust import ManualModel

from .factories import make_dataset

LN2 = math.log(2)


def outcome_rows(outcomes, followup=30.0, entries=None):
    """One patient per outcome: failures at day 5, successes followed past the window."""
    entries = entries if entries is not None else range(len(outcomes))
    return [(float(s), 5.0 if x else followup + 10.0, 1) for s, x in zip(entries, outcomes)]


class BernoulliWeightTests(SimpleTestCase):

    def test_odds_ratio_form(self):
        spec = BernoulliSpec(theta=LN2, p0=0.1)
        self.assertAlmostEqual(bernoulli_weight(1, 0.1, spec), 0.59784, places=5)
        self.assertAlmostEqual(bernoulli_weight(0, 0.1, spec), -0.09531, places=5)

    def test_no_change_gives_zero_weight(self):
        spec = BernoulliSpec(p0=0.3, p1=0.3)
        self.assertAlmostEqual(bernoulli_weight(1, 0.3, spec), 0.0, places=15)
        self.assertAlmostEqual(bernoulli_weight(0, 0.3, spec), 0.0, places=15)

    def test_forms_agree(self):
        odds = BernoulliSpec(theta=LN2, p0=0.1)
        probs = BernoulliSpec(p0=0.1, p1=0.2 / 1.1)
        for outcome in (0, 1):
            self.assertAlmostEqual(bernoulli_weight(outcome, 0.1, odds),
                                   bernoulli_weight(outcome, 0.1, probs), delta=1e-12)

    def test_invalid_outcome(self):
        with self.assertRaises(DataValidationError):
            bernoulli_weight(2, 0.1, BernoulliSpec(theta=LN2, p0=0.1))


class BernoulliSpecTests(SimpleTestCase):

    def test_parametrizations(self):
        self.assertEqual(BernoulliSpec(theta=LN2, p0=0.1).parametrization, 'p0+theta')
        self.assertEqual(BernoulliSpec(p0=0.1, p1=0.2).parametrization, 'p0+p1')
        model = ManualModel(intercept=-2.0)
        self.assertEqual(BernoulliSpec(theta=LN2, model=model).parametrization, 'model+theta')

    def test_invalid_combinations(self):
        model = ManualModel(intercept=-2.0)
        for kwargs in ({'theta': LN2}, {'p0': 0.1}, {'p0': 0.1, 'p1': 0.2, 'theta': LN2},
                       {'model': model, 'p0': 0.1, 'theta': LN2}, {}):
            with self.assertRaises(DataValidationError):
                BernoulliSpec(**kwargs)

    def test_probability_range(self):
        with self.assertRaises(DataValidationError):
            BernoulliSpec(theta=LN2, p0=1.0)
        with self.assertRaises(DataValidationError):
            BernoulliSpec(p0=0.1, p1=0.0)

    def test_lower_side(self):
        self.assertTrue(BernoulliSpec(theta=-LN2, p0=0.1).is_lower)
        self.assertTrue(BernoulliSpec(p0=0.2, p1=0.1).is_lower)
        self.assertFalse(BernoulliSpec(p0=0.1, p1=0.2).is_lower)


class BernoulliCusumTests(SimpleTestCase):

    def test_reference_sequence(self):
        data = make_dataset(outcome_rows([1, 0, 1]))
        chart = bernoulli_cusum(data, BernoulliSpec(theta=LN2, p0=0.1, followup=30))
        self.assertEqual(chart.kind, ChartKind.BERNOULLI)
        self.assertEqual(chart.times, (30.0, 31.0, 32.0))
        for value, expected in zip(chart.values, (0.59784, 0.50253, 1.10037)):
            self.assertAlmostEqual(value, expected, delta=1e-5)
        self.assertEqual(chart.start_time, 0.0)

    def test_all_successes_stay_at_zero(self):
        data = make_dataset(outcome_rows([0] * 25))
        chart = bernoulli_cusum(data, BernoulliSpec(theta=LN2, p0=0.1))
        self.assertTrue(all(v == 0.0 for v in chart.values))

    def test_lower_chart(self):
        data = make_dataset(outcome_rows([0] * 10 + [1]))
        chart = bernoulli_cusum(data, BernoulliSpec(theta=-LN2, p0=0.3))
        self.assertEqual(chart.kind, ChartKind.BERNOULLI_LOWER)
        self.assertTrue(all(v <= 0 for v in chart.values))
        self.assertLess(chart.values[9], chart.values[0])

    def test_model_probabilities(self):
        model = ManualModel(coefficients={'x': 1.0}, intercept=-2.0)
        rows = [(0.0, 5.0, 1, '1', {'x': 0.0}), (1.0, 40.0, 1, '1', {'x': 2.0})]
        chart = bernoulli_cusum(make_dataset(rows, ('x',)), BernoulliSpec(theta=LN2, model=model))
        p_first = 1 / (1 + math.exp(2.0))
        first = LN2 - math.log(1 + p_first)
        self.assertAlmostEqual(chart.values[0], first, places=12)
        self.assertAlmostEqual(chart.values[1], max(0.0, first - math.log(1.5)), places=12)

    def test_indeterminate_outcomes_are_rejected(self):
        data = make_dataset([(0.0, 5.0, 1), (1.0, 12.0, 0), (2.0, 40.0, 0)])
        self.assertEqual(indeterminate_outcomes(data, 30), [1])
        with self.assertRaisesRegex(DataValidationError, 'censored before the followup'):
            bernoulli_cusum(data, BernoulliSpec(theta=LN2, p0=0.1, followup=30))

    def test_censored_on_the_window_is_a_success(self):
        data = make_dataset([(0.0, 30.0, 0)])
        chart = bernoulli_cusum(data, BernoulliSpec(theta=LN2, p0=0.1, followup=30))
        self.assertEqual(chart.values, (0.0,))

    def test_tied_entries_share_one_point(self):
        data = make_dataset(outcome_rows([1, 1, 0], entries=[0.0, 0.0, 4.0]))
        chart = bernoulli_cusum(data, BernoulliSpec(theta=LN2, p0=0.1))
        self.assertEqual(chart.times, (30.0, 34.0))
        self.assertAlmostEqual(chart.values[0], 2 * 0.59784, places=4)

    def test_tie_order_does_not_change_values(self):
        spec = BernoulliSpec(theta=LN2, p0=0.1)
        first = bernoulli_cusum(make_dataset(outcome_rows([1, 0, 1], entries=[0.0, 0.0, 3.0])), spec)
        second = bernoulli_cusum(make_dataset(outcome_rows([0, 1, 1], entries=[0.0, 0.0, 3.0])), spec)
        self.assertEqual(first.times, second.times)
        np.testing.assert_allclose(first.values, second.values, rtol=0, atol=1e-12)

    def test_stoptime_and_early_stop_give_prefixes(self):
        rng = np.random.default_rng(4)
        data = make_dataset(outcome_rows((rng.random(200) < 0.25).astype(int).tolist()))
        spec = BernoulliSpec(theta=LN2, p0=0.1)
        full = bernoulli_cusum(data, spec)
        partial = bernoulli_cusum(data, spec, stoptime=130.0)
        self.assertEqual(partial.values, full.values[:len(partial)])
        self.assertEqual(partial.times[-1], 130.0)

        h = 0.5 * max(full.values)
        stopped = bernoulli_cusum(data, spec, h=h)
        self.assertEqual(stopped.values, full.values[:len(stopped)])
        self.assertGreaterEqual(stopped.values[-1], h)

    def test_forms_agree_on_random_configurations(self):
        rng = np.random.default_rng(2024)
        for _ in range(100):
            p0 = float(rng.uniform(0.02, 0.6))
            theta = float(rng.uniform(0.1, 1.5)) * rng.choice([-1.0, 1.0])
            odds = math.exp(theta)
            p1 = odds * p0 / (1 - p0 + odds * p0)
            data = make_dataset(outcome_rows((rng.random(40) < p0).astype(int).tolist()))
            by_odds = bernoulli_cusum(data, BernoulliSpec(theta=theta, p0=p0))
            by_probs = bernoulli_cusum(data, BernoulliSpec(p0=p0, p1=p1))
            self.assertEqual(by_odds.kind, by_probs.kind)
            np.testing.assert_allclose(by_odds.values, by_probs.values, rtol=0, atol=1e-12)
