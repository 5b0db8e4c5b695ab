from unittest import TestCase

from odeident.config import AnalysisConfig
from odeident.exceptions import InvalidInputError
from odeident.pipeline import AnalysisPipeline, run_pipeline
from odeident.registry import get_system


def pipeline(name, **kwargs):
    return AnalysisPipeline(AnalysisConfig(system=get_system(name), **kwargs))


class AnalysisPipelineTests(TestCase):

    def test_requires_a_system(self):
        with self.assertRaises(InvalidInputError):
            AnalysisPipeline(AnalysisConfig())

    def test_parse_is_idempotent(self):
        analysis = pipeline('ramp')

        system, p0 = analysis.parse()

        self.assertIs(analysis.parse()[0], system)
        self.assertEqual(len(analysis._directions), 4)

    def test_mode_follows_the_system(self):
        self.assertEqual(pipeline('tall-mixed').mode.value, 'h')
        self.assertEqual(pipeline('square-rank-drop', mode='h').mode.value, 'h')

    def test_errors_carry_their_stage(self):
        analysis = pipeline('tall-rank-drop', mode='k')

        with self.assertRaises(InvalidInputError) as cm:
            analysis.theta_section()

        self.assertEqual(cm.exception.stage, 'zeros')
        self.assertIn('zeros', analysis.timings)

    def test_document(self):
        analysis = pipeline('simple-zero', directions=('1',), eps=(0.1,))

        report = analysis.run()

        self.assertEqual(report['schema_version'], 1)
        self.assertEqual(report['system']['name'], 'simple-zero')
        self.assertEqual(report['observation_set']['orders'], [0, 1, 0])
        self.assertEqual(report['lambda_bounds'], [])
        self.assertEqual(list(report)[-1], 'timings')
        self.assertEqual(set(report['timings']),
                         {'parse', 'trajectory', 'sensitivity', 'zeros', 'certify', 'experiment'})

    def test_certificates_at_a_given_scale(self):
        rows = pipeline('simple-zero', directions=('1',)).certificates_section(0.01)

        self.assertEqual(rows[0]['epsilon'], 0.01)
        self.assertTrue(rows[0]['in_class'])

    def test_distinguish(self):
        section = pipeline('no-zero').distinguish('0.5')

        self.assertEqual(section['parameter'], '0.5')
        self.assertEqual(section['verdict']['witness_point'], 1.0)

    def test_left_endpoint_zero_is_flagged(self):
        theta = pipeline('ramp').theta_section()['observation_set']

        self.assertTrue(theta['endpoint_orders_fitted'])
        self.assertTrue(theta['endpoint_zeros'][0]['one_sided'])

    def test_interior_zero_only(self):
        theta = pipeline('simple-zero').theta_section()['observation_set']

        self.assertFalse(theta['endpoint_orders_fitted'])
        self.assertTrue(theta['simple_zeros_only'])


class RunPipelineTests(TestCase):

    def test_no_zero(self):
        report = run_pipeline(AnalysisConfig(system=get_system('no-zero'), directions=('1',), eps=(0.01,)))

        self.assertEqual(report['observation_set']['points'], [0.0, 1.0])
        certificates = report['certificates'][0]['certificates']
        self.assertEqual([c['variant'] for c in certificates], ['K4'])
        self.assertEqual(report['experiment']['counterexamples'], [])
