import json
from configparser import ConfigParser as BaseConfigParser
from configparser import Error as ConfigParserError
from dataclasses import dataclass, replace
from os import PathLike
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple

from .exceptions import ConfigurationError, InvalidInputError

SCHEMA_VERSION = 1

DEFAULT_GRID = 2001
DEFAULT_TOL = 1e-10
DEFAULT_WORKERS = 1
DEFAULT_EPS_MAX = 1e-1
DEFAULT_SEED = 0

DOCUMENT_KEYS = {'schema_version', 'system', 'mode', 'grid', 'tol', 'seed', 'workers', 'perturbations', 'witnesses',
                 'reduced_theta'}
PERTURBATION_KEYS = {'directions', 'eps', 'eps_max'}


def load_config(filename: PathLike) -> BaseConfigParser:
    config = ConfigParser(default_sections=('logger', 'analysis'))
    try:
        read = config.read(filename)
    except ConfigParserError as ex:
        raise ConfigurationError(f'Invalid configuration file: {filename}: {ex}')
    if len(read) == 0:
        raise ConfigurationError(f'Invalid configuration file: {filename}')

    return config


def load_user_config(filename: PathLike = None) -> BaseConfigParser:
    if not filename:
        filename = Path.home() / '.odeidentrc'
        if not filename.is_file():
            filename = Path('/etc/odeident.conf')
            if not filename.is_file():
                return ConfigParser(default_sections=('logger', 'analysis'))
    return load_config(filename)


class ConfigParser(BaseConfigParser):

    def __init__(self, *args, default_sections: Iterable[str] = None, **kwargs):
        kwargs.setdefault('converters', {})
        kwargs['converters']['list'] = lambda item: [s.strip() for s in item.split('\n') if s.strip()]
        kwargs['converters']['path'] = lambda item: Path(item)
        kwargs['converters']['pathlist'] = lambda item: [Path(s.strip()) for s in item.split('\n') if s.strip()]

        super(ConfigParser, self).__init__(*args, **kwargs)

        if default_sections:
            for section in default_sections:
                if not self.has_section(section):
                    self.add_section(section)

        self.optionxform = lambda option: option


def load_analysis_document(filename: PathLike) -> Dict:
    try:
        with open(filename, encoding='utf-8') as f:
            document = json.load(f)
    except OSError as ex:
        raise ConfigurationError(f'Cannot read analysis document {filename}: {ex.strerror}')
    except json.JSONDecodeError as ex:
        raise ConfigurationError(f'Invalid JSON in {filename} at line {ex.lineno}, column {ex.colno}: {ex.msg}')
    if not isinstance(document, dict):
        raise ConfigurationError(f'Analysis document {filename} must hold a JSON object')
    return document


def _get(data: Mapping, key: str, types: Tuple[type, ...], what: str = None):
    value = data[key]
    if isinstance(value, bool) and bool not in types or not isinstance(value, types):
        raise ConfigurationError(f'{what or key} must be of type {"/".join(t.__name__ for t in types)}, '
                                 f'got {type(value).__name__}')
    return value


def _directions(values, key: str) -> Tuple:
    if not isinstance(values, list) or not values:
        raise ConfigurationError(f'{key} must be a non-empty list')
    result = []
    for value in values:
        if isinstance(value, (str, int, float)) and not isinstance(value, bool):
            result.append(str(value))
        elif isinstance(value, list) and all(isinstance(v, (str, int, float)) for v in value):
            result.append(tuple(str(v) for v in value))
        else:
            raise ConfigurationError(f'Entries of {key} must be expressions or lists of expressions')
    return tuple(result)


@dataclass(frozen=True)
class AnalysisConfig:
    """
    Resolved analysis settings; flags override the JSON document, which
    overrides the user INI defaults, which override the built-in defaults.
    """
    system: Any = None
    mode: str = 'auto'
    grid: int = DEFAULT_GRID
    tol: float = DEFAULT_TOL
    seed: int = DEFAULT_SEED
    workers: int = DEFAULT_WORKERS
    directions: Optional[Tuple] = None
    eps: Optional[Tuple[float, ...]] = None
    eps_max: float = DEFAULT_EPS_MAX
    witnesses: Optional[Tuple] = None
    reduced_theta: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.grid < 3:
            raise InvalidInputError(f'Grid size must be at least 3, got {self.grid}')
        if not self.tol > 0:
            raise InvalidInputError(f'Tolerance must be positive, got {self.tol}')
        if self.workers < 1:
            raise InvalidInputError(f'Worker count must be positive, got {self.workers}')
        if not self.eps_max > 0:
            raise InvalidInputError(f'eps_max must be positive, got {self.eps_max}')
        if self.mode not in ('auto', 'k', 'h'):
            raise InvalidInputError(f'Unknown analysis mode {self.mode!r}')

    @classmethod
    def from_user_config(cls, config: BaseConfigParser = None) -> 'AnalysisConfig':
        try:
            section = config['analysis']
        except (KeyError, TypeError):
            return cls()
        try:
            return cls(grid=section.getint('grid', fallback=DEFAULT_GRID),
                       tol=section.getfloat('tol', fallback=DEFAULT_TOL),
                       workers=section.getint('workers', fallback=DEFAULT_WORKERS),
                       eps_max=section.getfloat('eps-max', fallback=DEFAULT_EPS_MAX),
                       seed=section.getint('seed', fallback=DEFAULT_SEED))
        except ValueError as ex:
            raise ConfigurationError(f'Invalid [analysis] defaults: {ex}')

    def merge_document(self, document: Mapping) -> 'AnalysisConfig':
        from .registry import SystemSpec

        unknown = set(document) - DOCUMENT_KEYS
        if unknown:
            raise ConfigurationError(f'Unknown configuration keys: {", ".join(sorted(unknown))}')
        version = document.get('schema_version')
        if version != SCHEMA_VERSION:
            raise ConfigurationError(f'Unsupported schema_version {version!r}; expected {SCHEMA_VERSION}')

        changes = {}
        if 'system' in document:
            changes['system'] = SystemSpec.from_dict(_get(document, 'system', (dict,)))
        if 'mode' in document:
            changes['mode'] = _get(document, 'mode', (str,)).lower()
        if 'grid' in document:
            changes['grid'] = _get(document, 'grid', (int,))
        if 'tol' in document:
            changes['tol'] = float(_get(document, 'tol', (int, float)))
        if 'seed' in document:
            changes['seed'] = _get(document, 'seed', (int,))
        if 'workers' in document:
            changes['workers'] = _get(document, 'workers', (int,))
        if 'witnesses' in document:
            changes['witnesses'] = _directions(document['witnesses'], 'witnesses')
        if 'reduced_theta' in document:
            points = _get(document, 'reduced_theta', (list,))
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in points):
                raise ConfigurationError('reduced_theta must be a list of numbers')
            changes['reduced_theta'] = tuple(float(v) for v in points)

        if 'perturbations' in document:
            perturbations = _get(document, 'perturbations', (dict,))
            unknown = set(perturbations) - PERTURBATION_KEYS
            if unknown:
                raise ConfigurationError(f'Unknown perturbation keys: {", ".join(sorted(unknown))}')
            if 'directions' in perturbations:
                changes['directions'] = _directions(perturbations['directions'], 'perturbations.directions')
            if 'eps' in perturbations:
                eps = _get(perturbations, 'eps', (list,), 'perturbations.eps')
                if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in eps):
                    raise ConfigurationError('perturbations.eps must be a list of numbers')
                changes['eps'] = tuple(float(v) for v in eps)
            if 'eps_max' in perturbations:
                changes['eps_max'] = float(_get(perturbations, 'eps_max', (int, float), 'perturbations.eps_max'))

        return replace(self, **changes)

    def merge_flags(self, **flags) -> 'AnalysisConfig':
        return replace(self, **{k: v for k, v in flags.items() if v is not None})

    def as_dict(self) -> Dict:
        return {
            'schema_version': SCHEMA_VERSION,
            'system': None if self.system is None else self.system.as_dict(),
            'mode': self.mode,
            'grid': self.grid,
            'tol': self.tol,
            'seed': self.seed,
            'workers': self.workers,
            'perturbations': {
                'directions': None if self.directions is None else [_echo(d) for d in self.directions],
                'eps': None if self.eps is None else list(self.eps),
                'eps_max': self.eps_max,
            },
            'witnesses': None if self.witnesses is None else [_echo(w) for w in self.witnesses],
            'reduced_theta': None if self.reduced_theta is None else list(self.reduced_theta),
        }


def _echo(direction):
    return direction if isinstance(direction, str) else list(direction)


def resolve_config(user_config: BaseConfigParser = None,
                   document: Mapping = None,
                   **flags) -> AnalysisConfig:
    config = AnalysisConfig.from_user_config(user_config)
    if document is not None:
        config = config.merge_document(document)
    return config.merge_flags(**flags)

