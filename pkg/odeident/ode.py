"""
Trajectories of x' = f(t, x, p(t)) and fundamental matrices of the
variational equation along a reference trajectory.
"""
from dataclasses import dataclass, field
from logging import getLogger
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from .core import DEFAULT_GRID_SIZE, TimeGrid
from .exceptions import (DomainViolationError, IntegrationFailure, InvalidInputError, NumericalDegeneracyError)

logger = getLogger(__name__)

DEFAULT_TOL = 1e-10
CONDITION_LIMIT = 1e12

VectorField = Callable[[float, np.ndarray, np.ndarray], np.ndarray]
JacobianField = Callable[[float, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class ParamFunction:
    """
    A C1 parameter-function t -> R^l together with its derivative.
    """
    eval: Callable[[float], np.ndarray]
    deriv: Callable[[float], np.ndarray]
    description: str = ''

    def __call__(self, t: float) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.eval(t), dtype=float))

    def derivative(self, t: float) -> np.ndarray:
        return np.atleast_1d(np.asarray(self.deriv(t), dtype=float))

    def sample(self, ts: Sequence[float]) -> np.ndarray:
        return np.array([self(t) for t in ts], dtype=float)

    @classmethod
    def constant(cls, value, description: str = None) -> 'ParamFunction':
        value = np.atleast_1d(np.asarray(value, dtype=float))
        zero = np.zeros_like(value)
        return cls(lambda t: value, lambda t: zero, description or f'const{value.tolist()}')

    def __add__(self, other: 'ParamFunction') -> 'ParamFunction':
        return ParamFunction(lambda t: self(t) + other(t),
                             lambda t: self.derivative(t) + other.derivative(t),
                             f'({self.description} + {other.description})')

    def __sub__(self, other: 'ParamFunction') -> 'ParamFunction':
        return ParamFunction(lambda t: self(t) - other(t),
                             lambda t: self.derivative(t) - other.derivative(t),
                             f'({self.description} - {other.description})')

    def scaled(self, factor: float) -> 'ParamFunction':
        factor = float(factor)
        return ParamFunction(lambda t: factor * self(t),
                             lambda t: factor * self.derivative(t),
                             f'{factor!r}*{self.description}')

    def check_derivative(self, a: float, b: float, rng: np.random.Generator, points: int = 5, rtol: float = 1e-6):
        """
        Compares ``deriv`` with central differences of ``eval`` at random points of [a, b].
        """
        for t in rng.uniform(a, b, size=points):
            h = 1e-5 * max(1.0, abs(t))
            approx = (self(t + h) - self(t - h)) / (2 * h)
            exact = self.derivative(t)
            if np.any(np.abs(approx - exact) > rtol * np.maximum(1.0, np.abs(exact))):
                raise InvalidInputError(f'Derivative of {self.description} does not match its values at t={t:.6g}')


@dataclass(frozen=True)
class SystemModel:
    n: int
    l: int
    T: float
    x0: np.ndarray
    rhs: VectorField
    jac_x: Optional[JacobianField] = None
    jac_p: Optional[JacobianField] = None
    name: str = 'system'

    def __post_init__(self):
        if self.n < 1 or self.l < 1:
            raise InvalidInputError(f'Dimensions must be positive (n={self.n}, l={self.l})')
        if not self.T > 0:
            raise InvalidInputError(f'Horizon must be positive (T={self.T})')
        x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if x0.shape != (self.n,):
            raise InvalidInputError(f'Initial state has shape {x0.shape}, expected ({self.n},)')
        object.__setattr__(self, 'x0', x0)

    def evaluate(self, t: float, x: np.ndarray, p: np.ndarray) -> np.ndarray:
        value = np.atleast_1d(np.asarray(self.rhs(t, x, p), dtype=float))
        if value.shape != (self.n,):
            raise InvalidInputError(f'Right-hand side returned shape {value.shape}, expected ({self.n},)')
        if not np.all(np.isfinite(value)):
            raise DomainViolationError(f'Non-finite right-hand side at t={t:.6g}')
        return value

    def default_grid(self, size: int = DEFAULT_GRID_SIZE) -> TimeGrid:
        return TimeGrid.uniform(0.0, self.T, size)


@dataclass(frozen=True)
class Trajectory:
    grid: TimeGrid
    states: np.ndarray
    param: ParamFunction
    integrator_tol: float
    dense: Callable = field(repr=False, compare=False)

    def at(self, t):
        """
        State at time(s) ``t`` from the dense output; shape (n,) or (m, n).
        """
        if np.ndim(t) == 0:
            return np.asarray(self.dense(float(t)), dtype=float)
        return np.asarray(self.dense(np.asarray(t, dtype=float)), dtype=float).T

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


@dataclass(frozen=True)
class FundamentalMatrix:
    tau: float
    n: int
    dense: Callable = field(repr=False, compare=False)

    def __call__(self, t: float) -> np.ndarray:
        if t == self.tau:
            return np.eye(self.n)
        return np.asarray(self.dense(float(t)), dtype=float).reshape(self.n, self.n)

    def values(self, ts: Sequence[float]) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        result = np.asarray(self.dense(ts), dtype=float).T.reshape(ts.size, self.n, self.n)
        result[ts == self.tau] = np.eye(self.n)
        return result

    def solve(self, ts: Sequence[float], rhs: np.ndarray) -> np.ndarray:
        """
        Y_tau(t)^-1 @ rhs[k] for every t = ts[k], by LU solves.
        """
        matrices = self.values(ts)
        conditions = np.linalg.cond(matrices)
        if not np.all(np.isfinite(conditions)) or np.any(conditions > CONDITION_LIMIT):
            raise NumericalDegeneracyError(f'Fundamental matrix based at {self.tau:.6g} is numerically singular')
        return np.linalg.solve(matrices, rhs)

    def inverse(self, t: float) -> np.ndarray:
        return self.solve([t], np.eye(self.n)[np.newaxis])[0]


def _solve(fun, t_span, y0, tol, what):
    solution = solve_ivp(fun, t_span, y0, method='RK45', rtol=tol, atol=tol, dense_output=True)
    if not solution.success:
        raise IntegrationFailure(f'{what} failed on [{t_span[0]:.6g}, {t_span[1]:.6g}]: {solution.message}')
    logger.debug('%s: %d steps, %d evaluations', what, solution.t.size - 1, solution.nfev)
    return solution.sol


def integrate_trajectory(system: SystemModel,
                         p: ParamFunction,
                         tol: float = DEFAULT_TOL,
                         grid: TimeGrid = None,
                         *,
                         start: Tuple[float, np.ndarray] = None,
                         end: float = None) -> Trajectory:
    """
    Integrates the system under parameter ``p`` with the Dormand-Prince 5(4)
    pair and samples it on ``grid``. ``start`` restarts the integration from
    a given (time, state) instead of (0, x0).
    """
    if not tol > 0:
        raise InvalidInputError(f'Integrator tolerance must be positive (tol={tol})')

    t0, x0 = (0.0, system.x0) if start is None else (float(start[0]), np.asarray(start[1], dtype=float))
    t1 = system.T if end is None else float(end)
    if grid is None:
        grid = TimeGrid.uniform(t0, t1, DEFAULT_GRID_SIZE)

    def fun(t, x):
        return system.evaluate(t, x, p(t))

    dense = _solve(fun, (t0, t1), x0, tol, f'Trajectory of {system.name}')
    states = np.asarray(dense(grid.points), dtype=float).T
    states[0] = x0
    if not np.all(np.isfinite(states)):
        raise IntegrationFailure(f'Trajectory of {system.name} left the domain')
    return Trajectory(grid=grid, states=states, param=p, integrator_tol=tol, dense=dense)


def jacobians(system: SystemModel, t: float, x: np.ndarray, p: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    (df/dx, df/dp) at (t, x, p); analytic callbacks when the model has them,
    central differences with step cbrt(eps)*max(1, |z_j|) otherwise.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    p = np.atleast_1d(np.asarray(p, dtype=float))

    if system.jac_x is not None:
        jx = np.asarray(system.jac_x(t, x, p), dtype=float).reshape(system.n, system.n)
    else:
        jx = _central_difference(lambda z: system.evaluate(t, z, p), x)

    if system.jac_p is not None:
        jp = np.asarray(system.jac_p(t, x, p), dtype=float).reshape(system.n, system.l)
    else:
        jp = _central_difference(lambda z: system.evaluate(t, x, z), p)

    if not (np.all(np.isfinite(jx)) and np.all(np.isfinite(jp))):
        raise DomainViolationError(f'Non-finite Jacobian at t={t:.6g}')
    return jx, jp


def _central_difference(func, z):
    step = np.cbrt(np.finfo(float).eps)
    columns = []
    for j in range(z.size):
        h = step * max(1.0, abs(z[j]))
        forward, backward = z.copy(), z.copy()
        forward[j] += h
        backward[j] -= h
        columns.append((func(forward) - func(backward)) / (forward[j] - backward[j]))
    return np.column_stack(columns)


def fundamental_matrix(system: SystemModel, ref_traj: Trajectory, tau: float, tol: float = None) -> FundamentalMatrix:
    """
    Solves Y' = df/dx(t, x(t), p0(t)) Y with Y(tau) = I on [tau, T].
    """
    if not 0 <= tau < system.T:
        raise InvalidInputError(f'Base time {tau} is outside [0, {system.T})')
    tol = tol or ref_traj.integrator_tol
    n = system.n
    p0 = ref_traj.param

    def fun(t, y):
        jx, _ = jacobians(system, t, ref_traj.at(t), p0(t))
        return (jx @ y.reshape(n, n)).ravel()

    dense = _solve(fun, (tau, system.T), np.eye(n).ravel(), tol, f'Variational equation of {system.name}')
    return FundamentalMatrix(tau=float(tau), n=n, dense=dense)
