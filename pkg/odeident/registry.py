"""
System definitions built from expressions, and the builtin registry.
"""
from dataclasses import dataclass, field
from logging import getLogger
from typing import Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np

from .exceptions import InvalidInputError
from .expressions import Expression, parse_expression
from .ode import ParamFunction, SystemModel
from .zerofinder import Mode

logger = getLogger(__name__)

DEFAULT_DIRECTIONS = ('1', 't', 't - 0.5', '(t - 0.5)^2')
DEFAULT_EPS = (1e-1, 1e-2, 1e-3)

SPEC_KEYS = {'name', 'builtin', 'n', 'l', 'T', 'x0', 'rhs', 'p0', 'mode', 'source', 'description'}

DirectionText = Union[str, Sequence[str]]


def param_function(expressions: Sequence[Expression], description: str = None) -> ParamFunction:
    """
    Parameter-function whose components are expressions of t, with symbolic derivatives.
    """
    expressions = tuple(expressions)
    derivatives = tuple(e.derivative('t') for e in expressions)

    def evaluate(t):
        return np.array([e.evaluate(t) for e in expressions])

    def derivative(t):
        return np.array([d.evaluate(t) for d in derivatives])

    if description is None:
        description = expressions[0].text if len(expressions) == 1 else f'[{", ".join(e.text for e in expressions)}]'
    return ParamFunction(evaluate, derivative, description)


def parse_param(texts: DirectionText, l: int) -> ParamFunction:
    """
    A list of l expressions of t, or one expression broadcast to all l components.
    """
    if isinstance(texts, (str, int, float)):
        expression = parse_expression(texts, allowed=('t',))
        return param_function([expression] * l, expression.text)
    texts = list(texts)
    if len(texts) != l:
        raise InvalidInputError(f'Expected {l} parameter components, got {len(texts)}')
    return param_function([parse_expression(text, allowed=('t',)) for text in texts])


@dataclass(frozen=True)
class SystemSpec:
    name: str
    n: int
    l: int
    T: float
    x0: Tuple[float, ...]
    rhs: Tuple[str, ...]
    p0: Tuple[str, ...]
    mode: str = 'auto'
    source: str = 'expression'
    description: str = field(default='', compare=False)

    def __post_init__(self):
        if not self.name:
            raise InvalidInputError('A system needs a name')
        if len(self.rhs) != self.n:
            raise InvalidInputError(f'System {self.name} has {len(self.rhs)} right-hand sides for n={self.n}')
        if len(self.x0) != self.n:
            raise InvalidInputError(f'System {self.name} has {len(self.x0)} initial values for n={self.n}')
        if len(self.p0) != self.l:
            raise InvalidInputError(f'System {self.name} has {len(self.p0)} reference components for l={self.l}')
        if self.mode not in ('auto', Mode.K.value, Mode.H.value):
            raise InvalidInputError(f'Unknown analysis mode {self.mode!r} for system {self.name}')
        for text in self.rhs:
            parse_expression(text, self.n, self.l)
        for text in self.p0:
            parse_expression(text, allowed=('t',))

    @classmethod
    def from_dict(cls, data: Mapping, source: str = 'expression') -> 'SystemSpec':
        if not isinstance(data, Mapping):
            raise InvalidInputError('A system definition must be an object')
        unknown = set(data) - SPEC_KEYS
        if unknown:
            raise InvalidInputError(f'Unknown system keys: {", ".join(sorted(unknown))}')
        if 'builtin' in data:
            return get_system(data['builtin'])

        missing = {'name', 'n', 'l', 'T', 'x0', 'rhs'} - set(data)
        if missing:
            raise InvalidInputError(f'System definition misses: {", ".join(sorted(missing))}')
        try:
            n, l, T = int(data['n']), int(data['l']), float(data['T'])
            x0 = tuple(float(v) for v in _as_list(data['x0']))
            rhs = tuple(str(v) for v in _as_list(data['rhs']))
            p0 = tuple(str(v) for v in _as_list(data.get('p0', ['0'] * l)))
        except (TypeError, ValueError) as ex:
            raise InvalidInputError(f'Invalid system definition: {ex}')
        if isinstance(data['n'], bool) or n < 1 or l < 1:
            raise InvalidInputError('Dimensions n and l must be positive integers')
        return cls(name=str(data['name']), n=n, l=l, T=T, x0=x0, rhs=rhs, p0=p0, mode=str(data.get('mode', 'auto')),
                   source=str(data.get('source', source)), description=str(data.get('description', '')))

    def as_dict(self) -> Dict:
        return {
            'name': self.name,
            'n': self.n,
            'l': self.l,
            'T': self.T,
            'x0': list(self.x0),
            'rhs': list(self.rhs),
            'p0': list(self.p0),
            'mode': self.mode,
            'source': self.source,
            'description': self.description,
        }

    def build(self) -> Tuple[SystemModel, ParamFunction]:
        """
        The system model with analytic Jacobians and the reference parameter.
        """
        rhs = [parse_expression(text, self.n, self.l) for text in self.rhs]

        def f(t, x, p):
            return np.array([e.evaluate(t, x, p) for e in rhs])

        system = SystemModel(n=self.n, l=self.l, T=self.T, x0=np.array(self.x0), rhs=f,
                             jac_x=_jacobian(rhs, 'x', self.n), jac_p=_jacobian(rhs, 'p', self.l), name=self.name)
        p0 = param_function([parse_expression(text, allowed=('t',)) for text in self.p0])
        return system, p0


def _jacobian(rhs: Sequence[Expression], kind: str, size: int):
    """
    Jacobian of rhs with respect to x or p. Entries that do not depend on
    (t, x, p) are evaluated once.
    """
    constant = np.zeros((len(rhs), size))
    varying = []
    for i, e in enumerate(rhs):
        present = {str(v) for v in e.variables()}
        for j in range(size):
            name = f'{kind}[{j}]'
            if name not in present:
                continue
            d = e.derivative(name)
            if d.is_constant:
                constant[i, j] = d.evaluate()
            else:
                varying.append((i, j, d))

    def jacobian(t, x, p):
        matrix = constant.copy()
        for i, j, d in varying:
            matrix[i, j] = d.evaluate(t, x, p)
        return matrix

    return jacobian


def _as_list(value) -> List:
    if isinstance(value, (str, int, float)):
        return [value]
    return list(value)


def _builtin(name, rhs, n=1, l=1, x0=None, description=''):
    return SystemSpec(name=name, n=n, l=l, T=1.0, x0=tuple(x0 or [0.0] * n), rhs=tuple(rhs), p0=('0',) * l,
                      source='builtin', description=description)


BUILTIN_SYSTEMS: Dict[str, SystemSpec] = {spec.name: spec for spec in (
    _builtin('no-zero', ['p0'], description="x' = p"),
    _builtin('simple-zero', ['(t - 0.5) * p0'], description="x' = (t - 0.5) p, simple zero at 0.5"),
    _builtin('double-zero', ['(t - 0.5)^2 * p0'], description="x' = (t - 0.5)^2 p, tangential zero at 0.5"),
    _builtin('affine', ['x0 + p0'], description="x' = x + p"),
    _builtin('nonlinear', ['x0^2 + p0'], x0=[0.1], description="x' = x^2 + p, x(0) = 0.1"),
    _builtin('tall-rank-drop', ['(t - 0.5) * p0 + 0.5 * x0', '(t - 0.5) * p0 - 0.5 * x1'], n=2, x0=[1.0, 1.0],
             description='n=2, l=1, D = (t - 0.5, t - 0.5)^T'),
    _builtin('tall-mixed', ['(t - 0.5) * p0', 'p1 + 0.2 * x0', 'x0 - x2'], n=3, l=2, x0=[1.0, 0.0, 1.0],
             description='n=3, l=2, B = diag((t - 0.5)^2, 1)'),
    _builtin('rotation-2d', ['x1 + p0', '-x0 + p1'], n=2, l=2, x0=[1.0, 0.0],
             description='df/dx is a rotation generator, D = I'),
    _builtin('ramp', ['t * p0'], description="x' = t p, zero of det D at the left endpoint"),
    _builtin('square-rank-drop', ['(t - 0.5) * p0', 'p1'], n=2, l=2, description='D = diag(t - 0.5, 1)'),
    _builtin('mixed-order', ['(t - 0.25) * (t - 0.75)^2 * p0'],
             description="x' = (t - 0.25)(t - 0.75)^2 p, zeros of order 1 and 2"),
)}


def list_systems() -> List[SystemSpec]:
    from .plugins import load_system_plugins

    return [*BUILTIN_SYSTEMS.values(), *load_system_plugins().values()]


def get_system(name: str) -> SystemSpec:
    try:
        return BUILTIN_SYSTEMS[name]
    except KeyError:
        pass

    from .plugins import load_system_plugins

    try:
        return load_system_plugins()[name]
    except KeyError:
        raise InvalidInputError(f'Unknown system {name!r}; use list-systems to see the registry')


def directions(texts: Sequence[DirectionText], l: int) -> List[ParamFunction]:
    return [parse_param(text, l) for text in texts]
