import json
import os
from tempfile import TemporaryDirectory
from unittest import TestCase

import numpy as np

from odeident.classes import CertificationContext
from odeident.registry import get_system
from odeident.report import CSV_COLUMNS, PlotData, dumps, format_float, strip_timings, to_jsonable, write_output
from odeident.zerofinder import Mode


class JsonTests(TestCase):

    def test_full_precision(self):
        text = dumps({'value': 0.1 + 0.2})

        self.assertIn('"value": 0.30000000000000004', text)
        self.assertEqual(json.loads(text)['value'], 0.1 + 0.2)

    def test_integral_floats_stay_floats(self):
        text = dumps({'value': 2.0, 'count': 2})

        self.assertIn('"value": 2.0', text)
        self.assertIn('"count": 2,', text)

    def test_float_format(self):
        self.assertEqual(format_float(1e-10), '1e-10')
        self.assertEqual(format_float(3.0), '3.0')
        self.assertEqual(format_float(-0.5), '-0.5')

    def test_nested_floats(self):
        payload = {'rows': [{'t': 0.25, 'values': [1e-12, 2.0]}], 'name': '0.5', 'count': 3}

        data = json.loads(dumps(payload))

        self.assertEqual(data, {'count': 3, 'name': '0.5', 'rows': [{'t': 0.25, 'values': [1e-12, 2.0]}]})
        self.assertIsInstance(data['rows'][0]['values'][1], float)
        self.assertIsInstance(data['name'], str)

    def test_strings_are_kept(self):
        text = dumps({'description': "x' = (t - 0.5) p", 'unicode': 'det ∂'})

        self.assertEqual(json.loads(text), {'description': "x' = (t - 0.5) p", 'unicode': 'det ∂'})

    def test_non_finite_values(self):
        data = json.loads(dumps({'a': np.inf, 'b': -np.inf, 'c': np.nan}))

        self.assertEqual(data, {'a': 'inf', 'b': '-inf', 'c': 'nan'})

    def test_numpy_values(self):
        data = json.loads(dumps({'array': np.array([1.5, 2.5]), 'int': np.int64(3), 'flag': np.bool_(True),
                            'tuple': (np.float64(0.25),)}))

        self.assertEqual(data, {'array': [1.5, 2.5], 'int': 3, 'flag': True, 'tuple': [0.25]})

    def test_keys_are_sorted(self):
        text = dumps({'b': 1, 'a': 2})

        self.assertLess(text.index('"a"'), text.index('"b"'))
        self.assertTrue(text.endswith('}\n'))

    def test_objects_with_as_dict(self):
        class Row:
            def as_dict(self):
                return {'mode': Mode.H}

        self.assertEqual(to_jsonable([Row()]), [{'mode': 'h'}])

    def test_strip_timings(self):
        self.assertEqual(strip_timings({'a': 1, 'timings': {'parse': 0.1}}), {'a': 1})


class PlotDataTests(TestCase):

    def test_mode_K(self):
        system, p0 = get_system('simple-zero').build()
        ctx = CertificationContext.build(system, p0, grid=system.default_grid(11))

        data = PlotData.from_path(ctx.path, ctx.obs.mode)
        lines = data.to_csv().splitlines()

        self.assertEqual(lines[0], ','.join(CSV_COLUMNS))
        self.assertEqual(len(lines), 12)
        np.testing.assert_allclose(data.det, data.t - 0.5, atol=1e-15)
        np.testing.assert_allclose(data.detB, (data.t - 0.5) ** 2, atol=1e-15)
        np.testing.assert_allclose(data.mu, np.abs(data.t - 0.5), atol=1e-15)

    def test_mode_H(self):
        system, p0 = get_system('tall-rank-drop').build()
        ctx = CertificationContext.build(system, p0, grid=system.default_grid(11))

        data = PlotData.from_path(ctx.path, Mode.H)

        np.testing.assert_array_equal(data.det, data.detB)
        np.testing.assert_allclose(data.mu, np.sqrt(2.0) * np.abs(data.t - 0.5), atol=1e-15)


class WriteOutputTests(TestCase):

    def test_file(self):
        with TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'report.json')

            write_output('{}\n', path)

            with open(path, encoding='utf-8') as f:
                self.assertEqual(f.read(), '{}\n')
