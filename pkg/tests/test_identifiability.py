from unittest import TestCase

import numpy as np

from odeident.classes import CertificationContext
from odeident.exceptions import InvalidInputError
from odeident.identifiability import distinguish, identifiability_experiment, negative_control
from odeident.ode import ParamFunction
from odeident.registry import DEFAULT_DIRECTIONS, DEFAULT_EPS, directions, get_system, parse_param


def context(name, mode='auto'):
    system, p0 = get_system(name).build()
    return CertificationContext.build(system, p0, mode), p0


class DistinguishTests(TestCase):

    def test_simple_zero(self):
        system, p0 = get_system('simple-zero').build()

        verdict = distinguish(system, p0, ParamFunction.constant(0.1), [0.0, 0.5, 1.0])

        self.assertTrue(verdict.distinguished)
        self.assertEqual(verdict.witness_point, 0.5)
        self.assertAlmostEqual(verdict.separation, 0.1 / 8, delta=1e-9)
        self.assertAlmostEqual(verdict.tol_used, 1e-8, delta=1e-20)
        self.assertLess(verdict.differences[2], 1e-9)

    def test_simple_zero_at_the_final_time_only(self):
        system, p0 = get_system('simple-zero').build()

        verdict = distinguish(system, p0, ParamFunction.constant(0.1), [1.0])

        self.assertFalse(verdict.distinguished)
        self.assertIsNone(verdict.witness_point)

    def test_no_zero(self):
        system, p0 = get_system('no-zero').build()

        verdict = distinguish(system, p0, ParamFunction.constant(0.1), [0.0, 1.0])

        self.assertTrue(verdict.distinguished)
        self.assertEqual(verdict.witness_point, 1.0)
        self.assertAlmostEqual(verdict.separation, 0.1, delta=1e-9)

    def test_identical_parameters(self):
        system, p0 = get_system('affine').build()

        verdict = distinguish(system, p0, p0, [0.0, 0.5, 1.0])

        self.assertFalse(verdict.distinguished)
        self.assertEqual(verdict.separation, 0.0)

    def test_symmetric(self):
        system, p0 = get_system('nonlinear').build()
        p = parse_param('0.05 * cos(3 * t)', 1)

        forward = distinguish(system, p0, p, [0.0, 0.5, 1.0])
        backward = distinguish(system, p, p0, [0.0, 0.5, 1.0])

        self.assertEqual(forward.distinguished, backward.distinguished)
        self.assertAlmostEqual(forward.separation, backward.separation, delta=1e-9)

    def test_linear_in_epsilon_for_affine_systems(self):
        system, p0 = get_system('affine').build()
        q = parse_param('t - 0.5', 1)

        small = distinguish(system, p0, q.scaled(0.01), [0.0, 1.0]).separation
        large = distinguish(system, p0, q.scaled(0.1), [0.0, 1.0]).separation

        self.assertAlmostEqual(large, 10 * small, delta=1e-8)

    def test_explicit_tolerance(self):
        system, p0 = get_system('no-zero').build()

        verdict = distinguish(system, p0, ParamFunction.constant(1e-3), [1.0], tol=1e-2)

        self.assertFalse(verdict.distinguished)
        self.assertEqual(verdict.tol_used, 1e-2)

    def test_points_outside_horizon(self):
        system, p0 = get_system('no-zero').build()

        with self.assertRaises(InvalidInputError):
            distinguish(system, p0, ParamFunction.constant(0.1), [0.0, 2.0])

    def test_empty_observation_set(self):
        system, p0 = get_system('no-zero').build()

        with self.assertRaises(InvalidInputError):
            distinguish(system, p0, ParamFunction.constant(0.1), [])


class ExperimentTests(TestCase):

    def experiment(self, name, texts=DEFAULT_DIRECTIONS, eps_grid=DEFAULT_EPS, **kwargs):
        ctx, p0 = context(name)
        family = directions(texts, ctx.system.l)
        return identifiability_experiment(ctx.system, p0, family, eps_grid, ctx.obs, context=ctx, **kwargs)

    def assertNoCounterexamples(self, report):
        self.assertEqual(report.counterexamples, [])
        for row in report.certified_rows:
            self.assertTrue(row.verdict.distinguished, f'{row.direction} at {row.epsilon}')

    def test_simple_zero(self):
        report = self.experiment('simple-zero', ('1', 't', 't - 0.5'))

        self.assertEqual(len(report.rows), 9)
        self.assertTrue(report.certified_rows)
        self.assertNoCounterexamples(report)
        self.assertEqual(report.fraction_distinguished, 1.0)

    def test_double_zero(self):
        report = self.experiment('double-zero')

        self.assertTrue(report.certified_rows)
        self.assertNoCounterexamples(report)

    def test_tall_rank_drop(self):
        report = self.experiment('tall-rank-drop')

        self.assertEqual(report.mode, 'h')
        self.assertTrue(report.certified_rows)
        self.assertNoCounterexamples(report)

    def test_tall_mixed(self):
        report = self.experiment('tall-mixed', ('t - 0.5', ['t - 0.5', '1']))

        self.assertTrue(report.certified_rows)
        self.assertNoCounterexamples(report)

    def test_minimum_separation(self):
        report = self.experiment('no-zero', ('1',), (0.5, 1e-3))

        self.assertAlmostEqual(report.min_separation, 1e-3, delta=1e-9)

    def test_non_positive_epsilon_is_skipped(self):
        report = self.experiment('no-zero', ('1',), (0.0, -0.1, 0.1))

        self.assertEqual([row.epsilon for row in report.rows], [0.1])

    def test_uncertified_rows_are_reported(self):
        report = self.experiment('mixed-order', ('1',), (0.1,))

        self.assertEqual(len(report.rows), 1)
        self.assertFalse(report.rows[0].certified)
        self.assertIn('left end', report.rows[0].failure_reason)
        self.assertIsNone(report.fraction_distinguished)
        self.assertEqual(report.counterexamples, [])

    def test_large_epsilon_failures_are_not_counterexamples(self):
        ctx, p0 = context('simple-zero')
        family = directions(('1',), 1)

        report = identifiability_experiment(ctx.system, p0, family, (0.1,), ctx.obs, context=ctx, eps_max=0.01,
                                            tol=1.0)

        self.assertEqual(report.counterexamples, [])
        self.assertEqual([row.index for row in report.large_eps_failures], [0])

    def test_workers_do_not_change_the_result(self):
        sequential = self.experiment('simple-zero', ('1', 't'), (0.1, 0.01))
        threaded = self.experiment('simple-zero', ('1', 't'), (0.1, 0.01), workers=3)

        self.assertEqual(sequential.as_dict(), threaded.as_dict())

    def test_context_is_built_when_missing(self):
        system, p0 = get_system('no-zero').build()

        report = identifiability_experiment(system, p0, directions(('1',), 1), (0.1,))

        self.assertEqual(report.theta, (0.0, 1.0))
        self.assertTrue(report.rows[0].certified)


class NegativeControlTests(TestCase):

    def test_simple_zero(self):
        ctx, p0 = context('simple-zero')

        report = negative_control(ctx.system, p0, [1.0], ctx.obs, directions(('1',), 1), 0.1)

        self.assertIsNotNone(report.witness)
        self.assertFalse(report.witness.reduced_verdict.distinguished)
        self.assertTrue(report.witness.verdict.distinguished)
        self.assertEqual(report.witness.verdict.witness_point, 0.5)
        self.assertAlmostEqual(report.witness.verdict.separation, 0.1 / 8, delta=1e-9)
        self.assertEqual(report.as_dict()['witness'], 0)

    def test_no_witness(self):
        ctx, p0 = context('simple-zero')

        report = negative_control(ctx.system, p0, [0.5], ctx.obs, directions(('1',), 1), 0.1)

        self.assertIsNone(report.witness)
        self.assertTrue(report.rows[0].reduced_verdict.distinguished)

    def test_reduced_set_is_invisible_without_zero(self):
        ctx, p0 = context('no-zero')
        family = [parse_param('sin(6.283185307179586 * t)', 1)]

        report = negative_control(ctx.system, p0, [1.0], ctx.obs, family, 0.1)

        self.assertFalse(report.rows[0].reduced_verdict.distinguished)

    def test_reduced_set_must_be_a_proper_subset(self):
        ctx, p0 = context('simple-zero')

        with self.assertRaises(InvalidInputError):
            negative_control(ctx.system, p0, [0.0, 0.5, 1.0], ctx.obs, directions(('1',), 1))
        with self.assertRaises(InvalidInputError):
            negative_control(ctx.system, p0, [0.25], ctx.obs, directions(('1',), 1))

    def test_report_lists_both_sets(self):
        ctx, p0 = context('simple-zero')

        data = negative_control(ctx.system, p0, [1.0], ctx.obs, directions(('1', 't'), 1), 0.1).as_dict()

        self.assertEqual(data['reduced_theta'], [1.0])
        np.testing.assert_allclose(data['theta'], [0.0, 0.5, 1.0], atol=1e-8)
        self.assertEqual(len(data['rows']), 2)
        self.assertIn('reduced_verdict', data['rows'][0])
