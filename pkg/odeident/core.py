"""
Time grids, sampled vector functions, the two function norms and the shared
composite Simpson quadrature.
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from .exceptions import InvalidInputError

DEFAULT_GRID_SIZE = 2001


@dataclass(frozen=True)
class TimeGrid:
    points: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 1 or points.size < 2:
            raise InvalidInputError('A time grid needs at least two points')
        if not np.all(np.isfinite(points)):
            raise InvalidInputError('Time grid points must be finite')
        if not np.all(np.diff(points) > 0):
            raise InvalidInputError('Time grid points must be strictly increasing')
        points.setflags(write=False)
        object.__setattr__(self, 'points', points)

    @classmethod
    def uniform(cls, a: float, b: float, size: int = DEFAULT_GRID_SIZE) -> 'TimeGrid':
        if not b > a:
            raise InvalidInputError(f'Empty time interval [{a}, {b}]')
        return cls(np.linspace(a, b, max(int(size), 2)))

    @property
    def a(self) -> float:
        return float(self.points[0])

    @property
    def b(self) -> float:
        return float(self.points[-1])

    def __len__(self):
        return self.points.size

    def sub(self, tau: float, theta: float) -> 'TimeGrid':
        """
        Uniform grid on [tau, theta] with the same density as this grid and
        an odd number of nodes, so Simpson panels tile it exactly.
        """
        if not (self.a <= tau < theta <= self.b):
            raise InvalidInputError(f'Interval [{tau}, {theta}] is outside [{self.a}, {self.b}]')
        size = int(np.ceil((theta - tau) / (self.b - self.a) * (len(self) - 1))) + 1
        size = max(size, 3)
        if size % 2 == 0:
            size += 1
        return TimeGrid.uniform(tau, theta, size)


@dataclass(frozen=True)
class VectorFunctionSamples:
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, np.newaxis]
        if values.ndim != 2 or values.shape[0] == 0:
            raise InvalidInputError('Samples must be a non-empty list of vectors')
        if values.shape[0] != len(self.grid):
            raise InvalidInputError(f'{values.shape[0]} samples do not match a grid of {len(self.grid)} points')
        object.__setattr__(self, 'values', values)

    @classmethod
    def sample(cls, func: Callable[[float], np.ndarray], grid: TimeGrid) -> 'VectorFunctionSamples':
        return cls(grid, np.array([np.atleast_1d(func(t)) for t in grid.points], dtype=float))

    @property
    def dimension(self) -> int:
        return self.values.shape[1]

    def magnitudes(self) -> np.ndarray:
        return np.linalg.norm(self.values, axis=1)


def sup_norm(q: VectorFunctionSamples) -> float:
    _ensure_samples(q)
    return float(np.max(q.magnitudes()))


def int_norm(q: VectorFunctionSamples) -> float:
    _ensure_samples(q)
    return float(quadrature(VectorFunctionSamples(q.grid, q.magnitudes()))[0])


def quadrature(g: VectorFunctionSamples) -> np.ndarray:
    """
    Componentwise composite Simpson rule over the sample grid; two-point
    grids fall back to the trapezoid rule.
    """
    _ensure_samples(g)
    points = g.grid.points
    if points.size == 2:
        return 0.5 * (points[1] - points[0]) * (g.values[0] + g.values[1])
    return np.asarray(simpson(g.values, x=points, axis=0), dtype=float)


def _ensure_samples(q):
    if not isinstance(q, VectorFunctionSamples) or q.values.size == 0:
        raise InvalidInputError('Empty function samples')
