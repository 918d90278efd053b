import json
import math
import os
import tempfile

from django.test import SimpleTestCase

from monitoring.chartcore import Chart, ChartPair
from monitoring.choices import ChartKind
from monitoring.exceptions import DataValidationError
from monitoring.riskadjust import CoxModel, LogisticModel, ManualModel, RateBaseline, StepBaseline
from monitoring.serializers import chart_from_dict, chart_to_dict, dump_json, model_from_dict, model_to_dict


def through_json(document):
    return json.loads(json.dumps(document))


class ModelDocumentTests(SimpleTestCase):

    def test_logistic(self):
        model = LogisticModel(intercept=-1.5, coefficients={'age': 0.02, 'sex': 0.4},
                              followup=30.0, p0_marginal=0.3)
        document = model_to_dict(model)
        self.assertEqual(document['kind'], 'logistic')
        self.assertEqual(model_from_dict(through_json(document)), model)

    def test_cox(self):
        model = CoxModel({'age': 0.02}, StepBaseline((1.0, 4.5, 9.0), (0.1, 0.25, 0.5)))
        document = through_json(model_to_dict(model))
        self.assertEqual(document['baseline'], {'times': [1.0, 4.5, 9.0], 'values': [0.1, 0.25, 0.5]})
        self.assertEqual(model_from_dict(document), model)

    def test_manual(self):
        model = ManualModel(coefficients={'x': 1.0}, intercept=-2.0, baseline=RateBaseline(0.01))
        self.assertEqual(model_from_dict(through_json(model_to_dict(model))), model)

    def test_document_without_kind_is_manual(self):
        model = model_from_dict({'coefficients': {'age': 0.1}, 'intercept': -2})
        self.assertIsInstance(model, ManualModel)
        self.assertEqual(model.intercept, -2.0)
        self.assertIsNone(model.baseline)

    def test_invalid_documents(self):
        for document in ({'coefficients': {'x': math.inf}},
                         {'kind': 'cox', 'coefficients': {}},
                         {'kind': 'cox', 'coefficients': {}, 'baseline': {'rate': 0.1}},
                         {'kind': 'weibull'},
                         {'baseline': {'times': [1.0]}}):
            with self.assertRaises(DataValidationError):
                model_from_dict(document)


class ChartDocumentTests(SimpleTestCase):

    def test_cgr_chart(self):
        chart = Chart(ChartKind.CGR, [1.0, 2.5], [0.0, 1.2], start_time=0.5, h=3.1, theta_hat=[0.0, 0.7])
        document = through_json(chart_to_dict(chart))
        self.assertEqual(document['points'][1], {'t': 2.5, 'value': 1.2, 'theta_hat': 0.7})
        self.assertEqual(chart_from_dict(document), chart)

    def test_empty_cgr_chart(self):
        chart = Chart(ChartKind.CGR, [], [], theta_hat=[])
        self.assertEqual(chart_from_dict(through_json(chart_to_dict(chart))), chart)

    def test_pair(self):
        pair = ChartPair(Chart(ChartKind.BK, [1.0], [0.4]), Chart(ChartKind.BK_LOWER, [1.0], [-0.2]))
        document = through_json(chart_to_dict(pair))
        self.assertEqual(document['kind'], 'pair')
        self.assertEqual(chart_from_dict(document), pair)

    def test_dump_json_writes_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'chart.json')
            text = dump_json({'kind': 'bk', 'points': []}, path)
            with open(path, encoding='utf-8') as handle:
                self.assertEqual(handle.read(), text + '\n')
