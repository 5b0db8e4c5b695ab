from unittest import TestCase
from unittest.mock import patch

import numpy as np

from odeident.core import VectorFunctionSamples, int_norm
from odeident.exceptions import InvalidInputError, InvalidRebaseError
from odeident.linalg import sym_eigenvalues
from odeident.ode import ParamFunction, fundamental_matrix
from odeident.processor import RowExecutor
from odeident.registry import BUILTIN_SYSTEMS, get_system, parse_param
from odeident.sensitivity import (psi_map, psi_operator_norm, remainder, sensitivity_operator_norm,
                                  sensitivity_path)


def build(name):
    system, p0 = get_system(name).build()
    path = sensitivity_path(system, p0)
    return system, p0, path


class SensitivityPathTests(TestCase):

    def test_tall_gram_matrix(self):
        system, p0, path = build('tall-rank-drop')

        self.assertEqual(path.D_values.shape, (2001, 2, 1))
        self.assertEqual(path.B_values.shape, (2001, 1, 1))
        np.testing.assert_allclose(path.B_values[:, 0, 0], 2 * (path.grid.points - 0.5) ** 2, atol=1e-14)
        self.assertAlmostEqual(path.det_B(0.25), 2 * 0.25 ** 2, delta=1e-14)

    def test_det_D_needs_square_matrix(self):
        _, _, path = build('tall-rank-drop')

        with self.assertRaises(InvalidInputError):
            path.det_D(0.5)

    def test_det_D(self):
        _, _, path = build('square-rank-drop')

        self.assertAlmostEqual(path.det_D(0.75), 0.25, delta=1e-14)

    def test_D_many_matches_grid_samples(self):
        _, _, path = build('mixed-order')

        np.testing.assert_allclose(path.D_many(path.grid.points[::100]), path.D_values[::100], atol=1e-14)

    def test_gram_matrix_is_positive_semidefinite(self):
        for name in BUILTIN_SYSTEMS:
            _, _, path = build(name)

            for B in path.B_values[::50]:
                self.assertGreaterEqual(sym_eigenvalues(B)[0], -1e-10, name)

    def test_kernel_is_built_once_across_threads(self):
        system, p0, path = build('affine')
        Y = fundamental_matrix(system, path.ref_traj, 0.0)

        with patch.object(path, 'D_many', wraps=path.D_many) as D_many:
            with RowExecutor(workers=8) as executor:
                kernels = executor.map(lambda _: path.kernel(Y, 0.0, 1.0), range(32))

        self.assertEqual(D_many.call_count, 1)
        for kernel in kernels:
            self.assertIs(kernel, kernels[0])


class PsiTests(TestCase):

    def psi(self, name, q, tau=0.0, theta=1.0):
        system, p0, path = build(name)
        Y = fundamental_matrix(system, path.ref_traj, tau)
        return psi_map(system, path, Y, tau, theta, q)

    def test_no_zero(self):
        self.assertAlmostEqual(self.psi('no-zero', ParamFunction.constant(1.0)).norm, 1.0, delta=1e-8)

    def test_affine(self):
        value = self.psi('affine', ParamFunction.constant(1.0)).value

        self.assertAlmostEqual(float(value[0]), 1 - np.exp(-1), delta=1e-8)

    def test_ramp(self):
        self.assertAlmostEqual(self.psi('ramp', ParamFunction.constant(1.0)).norm, 0.5, delta=1e-8)

    def test_sub_interval(self):
        # int_0.5^1 (s - 0.5) s ds
        value = self.psi('simple-zero', parse_param('t', 1), 0.5, 1.0).value

        self.assertAlmostEqual(float(value[0]), 5 / 48, delta=1e-8)

    def test_linear_in_the_perturbation(self):
        q = parse_param('cos(2 * t)', 1)
        system, p0, path = build('affine')
        Y = fundamental_matrix(system, path.ref_traj, 0.0)

        once = psi_map(system, path, Y, 0.0, 1.0, q).value
        thrice = psi_map(system, path, Y, 0.0, 1.0, q.scaled(3.0)).value

        np.testing.assert_allclose(thrice, 3 * once, rtol=1e-12)

    def test_interval_outside_horizon(self):
        with self.assertRaises(InvalidInputError):
            self.psi('no-zero', ParamFunction.constant(1.0), 0.5, 1.5)

    def test_fundamental_matrix_base_mismatch(self):
        system, p0, path = build('affine')
        Y = fundamental_matrix(system, path.ref_traj, 0.0)

        with self.assertRaises(InvalidInputError):
            psi_map(system, path, Y, 0.5, 1.0, ParamFunction.constant(1.0))

    def test_operator_norms(self):
        system, p0, path = build('affine')
        Y = fundamental_matrix(system, path.ref_traj, 0.0)

        self.assertAlmostEqual(psi_operator_norm(system, path, Y, 0.0, 1.0), 1.0, delta=1e-8)
        self.assertAlmostEqual(sensitivity_operator_norm(path, 0.0, 1.0), 1.0, delta=1e-14)

    def test_psi_is_bounded_by_its_operator_norm(self):
        rng = np.random.default_rng(11)
        for name in BUILTIN_SYSTEMS:
            system, p0, path = build(name)
            for tau, theta in ((0.0, 1.0), (0.25, 0.75)):
                Y = fundamental_matrix(system, path.ref_traj, tau)
                bound = psi_operator_norm(system, path, Y, tau, theta)
                grid = path.sub_grid(tau, theta)

                for _ in range(5):
                    a, b, w = rng.uniform(-2, 2, (3, system.l))
                    q = parse_param([f'{a[j]:.6f} + {b[j]:.6f} * sin({w[j]:.6f} * t)' for j in range(system.l)],
                                    system.l)

                    value = psi_map(system, path, Y, tau, theta, q).norm
                    q_norm = int_norm(VectorFunctionSamples(grid, q.sample(grid.points)))

                    self.assertLessEqual(value, bound * q_norm + 1e-8, name)


class RemainderTests(TestCase):

    def test_affine_is_exactly_linear(self):
        system, p0, path = build('affine')
        Y = fundamental_matrix(system, path.ref_traj, 0.0)

        sample = remainder(system, p0, ParamFunction.constant(0.1), 0.0, 1.0, path=path, Y=Y)

        self.assertAlmostEqual(sample.epsilon, 0.1, delta=1e-15)
        self.assertLessEqual(sample.g_norm, 1e-6)

    def test_nonlinear_remainder_is_little_o(self):
        system, p0, path = build('nonlinear')
        Y = fundamental_matrix(system, path.ref_traj, 0.0)

        ratios = [remainder(system, p0, ParamFunction.constant(eps), 0.0, 1.0, path=path, Y=Y).ratio
                  for eps in (1e-1, 1e-2, 1e-3)]

        self.assertLessEqual(ratios[2], 0.25 * ratios[1])
        self.assertLessEqual(ratios[1], 0.25 * ratios[0])

    def test_rebased_start(self):
        system, p0, path = build('nonlinear')
        Y = fundamental_matrix(system, path.ref_traj, 0.5)

        sample = remainder(system, p0, ParamFunction.constant(1e-3), 0.5, 1.0, path=path, Y=Y)

        self.assertLess(sample.ratio, 1e-2)

    def test_trajectories_must_meet_at_the_base_time(self):
        system, p0, path = build('no-zero')
        Y = fundamental_matrix(system, path.ref_traj, 0.5)

        with self.assertRaises(InvalidRebaseError):
            remainder(system, p0, ParamFunction.constant(0.1), 0.5, 1.0, path=path, Y=Y, rebase=False)

    def test_zero_perturbation(self):
        system, p0, path = build('no-zero')

        sample = remainder(system, p0, p0, 0.0, 1.0, path=path)

        self.assertEqual(sample.ratio, 0.0)
