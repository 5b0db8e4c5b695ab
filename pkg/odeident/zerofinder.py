"""
Zeros of det D(t) (mode K, n = l) or det B(t) (mode H, l <= n), their
orders and leading coefficients, and the observation set built from them.
"""
from dataclasses import dataclass, field
from enum import Enum
from logging import getLogger
from typing import Callable, Iterator, List, Optional, Tuple

import numpy as np
from scipy.optimize import bisect, minimize_scalar

from .core import TimeGrid
from .exceptions import (ClassMembershipError, InvalidInputError, NotPSDError, OrderIndeterminateError,
                         WindowTooSmallError)
from .ode import DEFAULT_TOL, ParamFunction, SystemModel
from .sensitivity import SensitivityPath, sensitivity_path

logger = getLogger(__name__)

ScalarFunction = Callable[[float], float]

BRACKET_TOL = 1e-10
TOUCH_TOL = 1e-8
MERGE_FACTOR = 10
WINDOW_FRACTION = 0.05
FIT_LEVELS = 8
ORDER_SLACK = 0.15


class Mode(str, Enum):
    K = 'k'
    H = 'h'

    @classmethod
    def resolve(cls, value, n: int, l: int) -> 'Mode':
        if isinstance(value, Mode):
            return value
        value = (value or 'auto').lower()
        if value == 'auto':
            return cls.K if n == l else cls.H
        try:
            return cls(value)
        except ValueError:
            raise InvalidInputError(f'Unknown analysis mode: {value}')


@dataclass(frozen=True)
class ZeroRecord:
    tau: float
    nu: int
    h: float
    residual: float
    mode: Mode = Mode.K
    window: float = 0.0
    one_sided: bool = False

    def __post_init__(self):
        if self.nu < 1 or self.h == 0:
            raise OrderIndeterminateError(f'Invalid zero record at {self.tau}: nu={self.nu}, h={self.h}')
        if self.mode is Mode.H and (self.nu != 2 or self.h <= 0):
            raise ClassMembershipError(f'Zero at {self.tau:.6g} is not a second order zero of det B')


@dataclass(frozen=True)
class ObservationSet:
    points: Tuple[float, ...]
    orders: Tuple[int, ...]
    records: Tuple[ZeroRecord, ...]
    mode: Mode
    touch: float = 0.0
    endpoint_records: Tuple[Optional[ZeroRecord], Optional[ZeroRecord]] = (None, None)
    det_function: Optional[ScalarFunction] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if len(self.points) < 2 or len(self.orders) != len(self.points):
            raise InvalidInputError('An observation set needs both endpoints and one order per point')
        if any(b <= a for a, b in zip(self.points, self.points[1:])):
            raise InvalidInputError('Observation points must be strictly increasing')
        if len(self.records) != len(self.points) - 2:
            raise InvalidInputError('Every interior observation point needs a zero record')

    def __iter__(self) -> Iterator[float]:
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    @property
    def intervals(self) -> List[Tuple[float, float]]:
        return list(zip(self.points, self.points[1:]))

    @property
    def simple_zeros_only(self) -> bool:
        return all(record.nu == 1 for record in self.records)

    @property
    def endpoint_orders_fitted(self) -> bool:
        return any(record is not None for record in self.endpoint_records)

    def record_at(self, index: int) -> Optional[ZeroRecord]:
        if index == 0:
            return self.endpoint_records[0]
        if index == len(self.points) - 1:
            return self.endpoint_records[1]
        return self.records[index - 1]


def find_zeros(g: ScalarFunction,
               grid: TimeGrid,
               mode: Mode = Mode.K,
               tol: float = None,
               touch: float = None) -> List[float]:
    """
    Sorted zero locations of ``g`` on the grid span.

    Mode K brackets sign changes and refines them by bisection, and finds
    tangential zeros as refined local minima of |g| below the touch
    threshold. Mode H expects g >= -tol and only looks for such minima.
    """
    a, b = grid.a, grid.b
    tol = tol or BRACKET_TOL * (b - a)
    ts = grid.points
    values = np.array([g(t) for t in ts], dtype=float)
    if not np.all(np.isfinite(values)):
        raise InvalidInputError('Determinant path has non-finite samples')
    if mode is Mode.H and np.min(values) < -tol:
        raise NotPSDError(f'det B dips to {np.min(values):.3g} < 0')

    magnitude = np.abs(values)
    touch = touch if touch is not None else TOUCH_TOL * float(np.max(magnitude))
    zeros = [float(t) for t, v in zip(ts, values) if v == 0.0]

    sign_change = np.zeros(ts.size, dtype=bool)
    if mode is Mode.K:
        for i in np.nonzero(values[:-1] * values[1:] < 0)[0]:
            zeros.append(float(bisect(g, ts[i], ts[i + 1], xtol=tol)))
            sign_change[i] = sign_change[i + 1] = True

    objective = np.abs if mode is Mode.K else (lambda v: v)
    for i in range(1, ts.size - 1):
        if values[i] == 0.0 or sign_change[i - 1] or sign_change[i] or sign_change[i + 1]:
            continue
        if not (magnitude[i] < magnitude[i - 1] and magnitude[i] <= magnitude[i + 1]):
            continue
        result = minimize_scalar(lambda t: objective(g(t)), bounds=(ts[i - 1], ts[i + 1]), method='bounded',
                                 options={'xatol': tol})
        if abs(g(result.x)) <= touch:
            zeros.append(float(result.x))

    for endpoint, value in ((a, values[0]), (b, values[-1])):
        if value != 0.0 and abs(value) <= touch:
            zeros.append(float(endpoint))

    return _merge(sorted(zeros), MERGE_FACTOR * tol, a, b)


def _merge(zeros: List[float], radius: float, a: float, b: float) -> List[float]:
    merged = []
    for z in zeros:
        if z - a <= radius:
            z = a
        elif b - z <= radius:
            z = b
        if merged and z - merged[-1] <= radius:
            continue
        merged.append(z)
    return merged


def estimate_order(g: ScalarFunction,
                   tau: float,
                   window: float,
                   mode: Mode = Mode.K,
                   bounds: Tuple[float, float] = None,
                   levels: int = FIT_LEVELS) -> ZeroRecord:
    """
    Fits |g(tau + t)| ~ |h| |t|^nu on geometric samples t = +-window*2^-j.
    """
    a, b = bounds if bounds is not None else (-np.inf, np.inf)
    steps = window * 2.0 ** -np.arange(levels + 1)
    sides = [side for side, inside in ((1, tau + window <= b), (-1, tau - window >= a)) if inside]
    if not sides:
        raise WindowTooSmallError(f'No room for an order fit around {tau:.6g}')

    log_t, log_g, signs = [], [], {}
    for side in sides:
        values = np.array([g(tau + side * step) for step in steps], dtype=float)
        if np.any(values == 0.0) or not np.all(np.isfinite(values)):
            raise WindowTooSmallError(f'Samples underflow in the order fit around {tau:.6g}')
        log_t.append(np.log(steps))
        log_g.append(np.log(np.abs(values)))
        signs[side] = np.sign(values[-1])

    x = np.concatenate(log_t)
    y = np.concatenate(log_g)
    slope, intercept = np.polyfit(x, y, 1)
    nu = int(round(slope))
    if nu < 1 or abs(slope - nu) > ORDER_SLACK:
        raise OrderIndeterminateError(f'Zero at {tau:.6g} has a non-integer order (fitted slope {slope:.3f})')

    fit = slope * x + intercept
    spread = max(1.0, float(np.ptp(y)))
    residual = min(1.0, float(np.sqrt(np.mean((y - fit) ** 2))) / spread)

    # The coefficient comes from the innermost levels with the order fixed.
    inner = np.concatenate([np.arange(levels // 2, levels + 1) + k * (levels + 1) for k in range(len(sides))])
    magnitude = float(np.exp(np.mean(y[inner] - nu * x[inner])))
    if 1 in signs:
        sign = signs[1]
    else:
        sign = signs[-1] * (-1) ** nu

    if mode is Mode.H:
        if nu != 2:
            raise ClassMembershipError(f'det B has a zero of order {nu} at {tau:.6g}; only second order zeros '
                                       f'are allowed')
        h = float(np.sqrt(magnitude))
    else:
        h = float(sign * magnitude)

    logger.debug('Zero at %.12g: nu=%d h=%.6g residual=%.3g', tau, nu, h, residual)
    return ZeroRecord(tau=float(tau), nu=nu, h=h, residual=residual, mode=mode, window=float(window),
                      one_sided=len(sides) == 1)


def determinant_function(path: SensitivityPath, mode: Mode) -> ScalarFunction:
    return path.det_D if mode is Mode.K else path.det_B


def observation_set(system: SystemModel,
                    p0: ParamFunction,
                    mode='auto',
                    *,
                    path: SensitivityPath = None,
                    grid: TimeGrid = None,
                    tol: float = DEFAULT_TOL) -> ObservationSet:
    mode = Mode.resolve(mode, system.n, system.l)
    if mode is Mode.K and system.n != system.l:
        raise InvalidInputError(f'Mode K needs n = l (n={system.n}, l={system.l})')
    if mode is Mode.H and system.l > system.n:
        raise InvalidInputError(f'Mode H needs l <= n (n={system.n}, l={system.l})')

    path = path or sensitivity_path(system, p0, grid, tol)
    g = determinant_function(path, mode)
    T = system.T
    bracket_tol = BRACKET_TOL * T
    samples = np.linalg.det(path.D_values if mode is Mode.K else path.B_values)
    touch = TOUCH_TOL * float(np.max(np.abs(samples)))

    logger.info('Locating zeros of det %s on [0, %g]...', 'D' if mode is Mode.K else 'B', T)
    zeros = find_zeros(g, path.grid, mode, bracket_tol, touch)

    records = []
    for index, tau in enumerate(zeros):
        neighbours = [abs(tau - other) for k, other in enumerate(zeros) if k != index]
        window = min([WINDOW_FRACTION * T] + [0.5 * d for d in neighbours])
        try:
            records.append(estimate_order(g, tau, window, mode, bounds=(0.0, T)))
        except OrderIndeterminateError as ex:
            raise ClassMembershipError(f'System {system.name} is outside the class: {ex}')

    start = records[0] if records and records[0].tau == 0.0 else None
    end = records[-1] if records and records[-1].tau == T else None
    interior = tuple(r for r in records if 0.0 < r.tau < T)

    points = (0.0,) + tuple(r.tau for r in interior) + (float(T),)
    orders = (start.nu if start else 0,) + tuple(r.nu for r in interior) + (end.nu if end else 0,)
    if start or end:
        logger.warning('det vanishes at an endpoint of [0, %g]; its order comes from a one-sided fit', T)

    return ObservationSet(points=points, orders=orders, records=interior, mode=mode, touch=touch,
                          endpoint_records=(start, end), det_function=g)
