"""
Quantities along the reference trajectory: the sensitivity matrix
D(t) = df/dp, its Gram matrix B(t) = D(t)^T D(t), the linear map
Psi_{tau,theta}(q) = int_tau^theta Y_tau^-1(s) D(s) q(s) ds and the
linearisation remainder.
"""
from dataclasses import dataclass, field
from logging import getLogger
from threading import Lock
from typing import Dict, Tuple

import numpy as np

from .core import TimeGrid, VectorFunctionSamples, quadrature, sup_norm
from .exceptions import InvalidInputError, InvalidRebaseError
from .ode import (DEFAULT_TOL, FundamentalMatrix, ParamFunction, SystemModel, Trajectory, fundamental_matrix,
                  integrate_trajectory, jacobians)

logger = getLogger(__name__)


@dataclass(frozen=True)
class IntervalKernel:
    """
    Samples of D(s) and Y_tau^-1(s) D(s) on a sub-grid of [tau, theta].
    """
    grid: TimeGrid
    D: np.ndarray
    weighted: np.ndarray

    def apply(self, q_values: np.ndarray) -> np.ndarray:
        return np.einsum('kij,kj->ki', self.weighted, q_values)


@dataclass
class SensitivityPath:
    grid: TimeGrid
    D_values: np.ndarray
    B_values: np.ndarray
    ref_traj: Trajectory
    system: SystemModel = field(repr=False)
    _kernels: Dict[Tuple[float, float, float], IntervalKernel] = field(default_factory=dict, repr=False,
                                                                        compare=False)
    _lock: Lock = field(default_factory=Lock, repr=False, compare=False)

    @property
    def p0(self) -> ParamFunction:
        return self.ref_traj.param

    def D_at(self, t: float) -> np.ndarray:
        return jacobians(self.system, t, self.ref_traj.at(t), self.p0(t))[1]

    def D_many(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        states = self.ref_traj.at(ts)
        return np.array([jacobians(self.system, t, x, self.p0(t))[1] for t, x in zip(ts, states)])

    def B_at(self, t: float) -> np.ndarray:
        D = self.D_at(t)
        return D.T @ D

    def det_D(self, t: float) -> float:
        if self.system.n != self.system.l:
            raise InvalidInputError(f'det D(t) needs a square sensitivity matrix (n={self.system.n}, '
                                    f'l={self.system.l})')
        return float(np.linalg.det(self.D_at(t)))

    def det_B(self, t: float) -> float:
        return float(np.linalg.det(self.B_at(t)))

    def sub_grid(self, tau: float, theta: float) -> TimeGrid:
        return self.grid.sub(tau, theta)

    def kernel(self, Y: FundamentalMatrix, tau: float, theta: float) -> IntervalKernel:
        if Y.tau != tau:
            raise InvalidInputError(f'Fundamental matrix is based at {Y.tau}, not at {tau}')
        key = (float(tau), float(theta), Y.tau)
        with self._lock:
            if key not in self._kernels:
                grid = self.sub_grid(tau, theta)
                D = self.D_many(grid.points)
                self._kernels[key] = IntervalKernel(grid=grid, D=D, weighted=Y.solve(grid.points, D))
            return self._kernels[key]


@dataclass(frozen=True)
class PsiValue:
    tau: float
    theta: float
    value: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.value))


@dataclass(frozen=True)
class RemainderSample:
    epsilon: float
    g_norm: float
    ratio: float


def sensitivity_path(system: SystemModel,
                     p0: ParamFunction,
                     grid: TimeGrid = None,
                     tol: float = DEFAULT_TOL,
                     ref_traj: Trajectory = None) -> SensitivityPath:
    grid = grid or system.default_grid()
    ref_traj = ref_traj or integrate_trajectory(system, p0, tol, grid)
    logger.debug('Evaluating sensitivity matrices of %s on %d points', system.name, len(grid))

    D_values = np.array([jacobians(system, t, x, p0(t))[1] for t, x in zip(grid.points, ref_traj.states)])
    B_values = np.einsum('kji,kjl->kil', D_values, D_values)
    return SensitivityPath(grid=grid, D_values=D_values, B_values=B_values, ref_traj=ref_traj, system=system)


def _check_interval(path: SensitivityPath, tau: float, theta: float):
    if not 0 <= tau < theta <= path.system.T:
        raise InvalidInputError(f'Interval [{tau}, {theta}] is not inside [0, {path.system.T}]')


def psi_map(system: SystemModel,
            path: SensitivityPath,
            Y: FundamentalMatrix,
            tau: float,
            theta: float,
            q: ParamFunction) -> PsiValue:
    _check_interval(path, tau, theta)
    kernel = path.kernel(Y, tau, theta)
    integrand = kernel.apply(q.sample(kernel.grid.points))
    return PsiValue(tau=tau, theta=theta, value=quadrature(VectorFunctionSamples(kernel.grid, integrand)))


def psi_operator_norm(system: SystemModel, path: SensitivityPath, Y: FundamentalMatrix, tau: float,
                      theta: float) -> float:
    """
    Upper bound max_t ||Y_tau^-1(t) D(t)|| for the norm of Psi_{tau,theta}
    consistent with the integral norm.
    """
    _check_interval(path, tau, theta)
    kernel = path.kernel(Y, tau, theta)
    return float(np.max(np.linalg.norm(kernel.weighted, ord=2, axis=(1, 2))))


def sensitivity_operator_norm(path: SensitivityPath, tau: float, theta: float) -> float:
    """
    Upper bound max_t ||D(t)|| for the norm of D acting in the integral norm.
    """
    grid = path.sub_grid(tau, theta)
    return float(np.max(np.linalg.norm(path.D_many(grid.points), ord=2, axis=(1, 2))))


def remainder(system: SystemModel,
              p0: ParamFunction,
              p: ParamFunction,
              tau: float,
              theta: float,
              *,
              path: SensitivityPath = None,
              Y: FundamentalMatrix = None,
              tol: float = DEFAULT_TOL,
              rebase: bool = True) -> RemainderSample:
    """
    G = Delta_p x(theta) - Y_tau(theta) Psi_{tau,theta}(Delta p) with the
    perturbed trajectory started at x(tau, {p0}).
    """
    path = path or sensitivity_path(system, p0, tol=tol)
    _check_interval(path, tau, theta)
    Y = Y or fundamental_matrix(system, path.ref_traj, tau, tol)
    ref = path.ref_traj
    x_tau = ref.at(tau) if tau > 0 else system.x0

    if rebase:
        perturbed_theta = integrate_trajectory(system, p, tol, start=(tau, x_tau), end=theta).final_state
    else:
        perturbed = integrate_trajectory(system, p, tol)
        if np.linalg.norm(perturbed.at(tau) - x_tau) > 10 * tol:
            raise InvalidRebaseError(f'Trajectories differ at tau={tau:.6g}; restart the perturbed one at x(tau)')
        perturbed_theta = perturbed.at(theta)

    dp = p - p0
    psi = psi_map(system, path, Y, tau, theta, dp)
    G = (perturbed_theta - ref.at(theta)) - Y(theta) @ psi.value

    dp_norm = sup_norm(VectorFunctionSamples.sample(dp, path.sub_grid(tau, theta)))
    g_norm = float(np.linalg.norm(G))
    ratio = g_norm / dp_norm if dp_norm > 0 else 0.0
    return RemainderSample(epsilon=dp_norm, g_norm=g_norm, ratio=ratio)
