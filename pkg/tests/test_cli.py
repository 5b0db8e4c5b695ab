import json
from unittest import TestCase

from click.testing import CliRunner

from odeident import __version__
from odeident.cli import odeident
from odeident.report import strip_timings


class CliTestCase(TestCase):

    def setUp(self):
        self.runner = CliRunner()

    def invoke(self, *args, exit_code=0):
        result = self.runner.invoke(odeident, list(args), catch_exceptions=False)
        self.assertEqual(result.exit_code, exit_code, result.output)
        return result

    def report(self, *args, exit_code=0):
        with self.runner.isolated_filesystem():
            self.invoke(*args, '--out', 'report.json', exit_code=exit_code)
            with open('report.json', encoding='utf-8') as f:
                return json.load(f)

    def plot_lines(self, *args):
        with self.runner.isolated_filesystem():
            self.invoke(*args, '--format', 'csv', '--grid', '101', '--out', 'plot.csv')
            with open('plot.csv', encoding='utf-8') as f:
                return f.read().splitlines()

    def document(self, data, name='analysis.json'):
        with open(name, 'w', encoding='utf-8') as f:
            json.dump(data, f)
        return name


class GeneralTests(CliTestCase):

    def test_version(self):
        self.assertIn(__version__, self.invoke('--version').output)

    def test_list_systems(self):
        output = self.invoke('list-systems').output

        self.assertIn('simple-zero', output)
        self.assertIn('n=3 l=2', output)

    def test_unknown_system(self):
        result = self.invoke('theta', '--system', 'nothing', exit_code=2)

        self.assertIn('[parse] invalid-input:', result.output)

    def test_missing_system(self):
        result = self.invoke('theta', exit_code=2)

        self.assertIn('No system given', result.output)


class ThetaTests(CliTestCase):

    def test_simple_zero(self):
        report = self.report('theta', '--system', 'simple-zero')

        theta = report['observation_set']
        self.assertEqual(report['schema_version'], 1)
        self.assertEqual(theta['mode'], 'k')
        self.assertEqual(theta['orders'], [0, 1, 0])
        self.assertAlmostEqual(theta['points'][1], 0.5, delta=1e-8)
        self.assertLess(report['determinant']['det_D']['min'], 0.0)
        self.assertLess(report['determinant']['det_D']['min_abs'], 1e-12)

    def test_csv(self):
        lines = self.plot_lines('theta', '--system', 'tall-rank-drop')

        self.assertEqual(lines[0], 't,det,detB,mu')
        self.assertEqual(len(lines), 102)

    def test_mode_stage_is_reported(self):
        result = self.invoke('theta', '--system', 'tall-rank-drop', '--mode', 'k', exit_code=2)

        self.assertIn('[zeros] invalid-input:', result.output)

    def test_malformed_expression(self):
        with self.runner.isolated_filesystem():
            name = self.document({'schema_version': 1,
                                  'system': {'name': 'bad', 'n': 1, 'l': 1, 'T': 1, 'x0': [0],
                                             'rhs': ['(t - 0.5) * * p0']}})

            result = self.invoke('theta', '--config', name, exit_code=2)

        self.assertIn('[parse] syntax-error:', result.output)
        self.assertIn('line 1, column 13', result.output)

    def test_invalid_document(self):
        with self.runner.isolated_filesystem():
            with open('analysis.json', 'w', encoding='utf-8') as f:
                f.write('{"schema_version": 1,')

            result = self.invoke('theta', '--config', 'analysis.json', exit_code=2)

        self.assertIn('configuration-error', result.output)

    def test_system_from_document(self):
        with self.runner.isolated_filesystem():
            name = self.document({'schema_version': 1,
                                  'system': {'name': 'shifted', 'n': 1, 'l': 1, 'T': 2, 'x0': [0],
                                             'rhs': ['(t - 1.5) * p0']}})
            self.invoke('theta', '--config', name, '--out', 'report.json')
            with open('report.json', encoding='utf-8') as f:
                report = json.load(f)

        self.assertEqual(report['system']['name'], 'shifted')
        self.assertAlmostEqual(report['observation_set']['points'][1], 1.5, delta=1e-8)
        self.assertEqual(report['observation_set']['points'][2], 2.0)


class AnalyzeTests(CliTestCase):

    def test_no_zero(self):
        report = self.report('analyze', '--system', 'no-zero')

        self.assertEqual(report['experiment']['counterexamples'], [])
        self.assertEqual(len(report['experiment']['rows']), 12)
        self.assertIsNone(report['mininorm'])
        self.assertIsNone(report['negative_control'])
        self.assertIn('trajectory', report['timings'])

    def test_deterministic_apart_from_timings(self):
        args = ('analyze', '--system', 'simple-zero', '-q', '1', '-q', 't', '--eps', '0.1', '--eps', '0.01')

        first = self.report(*args)
        second = self.report(*args)

        self.assertEqual(strip_timings(first), strip_timings(second))

    def test_tall_system(self):
        report = self.report('analyze', '--system', 'tall-rank-drop', '-q', '1', '--eps', '0.01')

        self.assertEqual(report['observation_set']['mode'], 'h')
        self.assertEqual(len(report['mininorm']['rank_drop_points']), 1)

    def test_negative_control(self):
        report = self.report('analyze', '--system', 'simple-zero', '-q', '1', '--eps', '0.1', '--reduced-theta', '1')

        control = report['negative_control']
        self.assertEqual(control['reduced_theta'], [1.0])
        self.assertEqual(control['witness'], 0)

    def test_workers_flag(self):
        report = self.report('analyze', '--system', 'simple-zero', '-q', '1', '--eps', '0.1', '--workers', '2')

        self.assertEqual(report['config']['workers'], 2)

    def test_document_settings(self):
        with self.runner.isolated_filesystem():
            name = self.document({'schema_version': 1, 'system': {'builtin': 'simple-zero'}, 'grid': 1001,
                                  'perturbations': {'directions': ['1'], 'eps': [0.1]},
                                  'witnesses': ['t - 0.5']})
            self.invoke('analyze', '--config', name, '--out', 'report.json')
            with open('report.json', encoding='utf-8') as f:
                report = json.load(f)

        self.assertEqual(report['grid']['size'], 1001)
        self.assertEqual(len(report['experiment']['rows']), 1)
        self.assertEqual(len(report['lambda_bounds']), 2)


class CheckClassTests(CliTestCase):

    def test_in_class(self):
        report = self.report('check-class', '--system', 'simple-zero', '-q', '1', '--eps', '0.1')

        row = report['certificates'][0]
        self.assertTrue(row['in_class'])
        self.assertEqual([c['variant'] for c in row['certificates']], ['K2', 'K3'])

    def test_not_in_class(self):
        report = self.report('check-class', '--system', 'mixed-order', '-q', '1', exit_code=1)

        self.assertFalse(report['certificates'][0]['in_class'])

    def test_csv(self):
        lines = self.plot_lines('check-class', '--system', 'mixed-order', '-q', '1')

        self.assertEqual(lines[0], 't,det,detB,mu')
        self.assertEqual(len(lines), 102)


class DistinguishTests(CliTestCase):

    def test_simple_zero(self):
        report = self.report('distinguish', '--system', 'simple-zero', '-p', '0.1')

        verdict = report['distinguish']['verdict']
        self.assertTrue(verdict['distinguished'])
        self.assertAlmostEqual(verdict['witness_point'], 0.5, delta=1e-8)
        self.assertAlmostEqual(verdict['separation'], 0.0125, delta=1e-9)

    def test_component_count(self):
        result = self.invoke('distinguish', '--system', 'rotation-2d', '-p', '1', '-p', '2', '-p', '3',
                             exit_code=2)

        self.assertIn('Expected 2 parameter components', result.output)

    def test_csv(self):
        lines = self.plot_lines('distinguish', '--system', 'simple-zero', '-p', '0.1')

        self.assertEqual(lines[0], 't,det,detB,mu')
        t, det, _, _ = map(float, lines[51].split(','))
        self.assertAlmostEqual(t, 0.5, delta=1e-12)
        self.assertAlmostEqual(det, 0.0, delta=1e-12)


class SweepTests(CliTestCase):

    def test_sweep(self):
        report = self.report('sweep', '--system', 'double-zero', '-q', '1', '-q', 't - 0.5', '--eps', '0.01')

        self.assertEqual(len(report['experiment']['rows']), 2)
        self.assertEqual(report['experiment']['counterexamples'], [])

    def test_csv(self):
        lines = self.plot_lines('sweep', '--system', 'double-zero', '-q', '1', '--eps', '0.01')

        self.assertEqual(lines[0], 't,det,detB,mu')
        self.assertEqual(len(lines), 102)


class MininormPathTests(CliTestCase):

    def test_tall_rank_drop(self):
        report = self.report('mininorm-path', '--system', 'tall-rank-drop')

        drop = report['mininorm']['rank_drop_points'][0]
        self.assertAlmostEqual(drop['predicted_slope'], 2 ** 0.5, delta=1e-6)
        self.assertAlmostEqual(drop['right_slope'], 2 ** 0.5, delta=1e-6)

    def test_square_system_uses_det_B(self):
        report = self.report('mininorm-path', '--system', 'square-rank-drop')

        self.assertEqual(report['observation_set']['mode'], 'h')
        self.assertAlmostEqual(report['mininorm']['rank_drop_points'][0]['right_slope'], 1.0, delta=1e-6)

    def test_mode_k_is_rejected(self):
        result = self.invoke('mininorm-path', '--system', 'tall-rank-drop', '--mode', 'k', exit_code=2)

        self.assertIn('[parse] invalid-input:', result.output)
