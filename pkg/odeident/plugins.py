from importlib.metadata import entry_points
from logging import getLogger
from typing import Dict, Iterator, Mapping

from .exceptions import InvalidInputError
from .registry import SystemSpec

SYSTEMS_ENTRY_POINT = 'odeident.systems'

logger = getLogger(__name__)


def iter_plugins(group: str = SYSTEMS_ENTRY_POINT) -> Iterator:
    yield from entry_points(group=group)


def resolve_system(plugin) -> SystemSpec:
    """
    An entry point may name a SystemSpec, a mapping for SystemSpec.from_dict
    or a callable returning either.
    """
    value = plugin.load()
    if callable(value) and not isinstance(value, SystemSpec):
        value = value()
    if isinstance(value, SystemSpec):
        return value
    if isinstance(value, Mapping):
        return SystemSpec.from_dict({'name': plugin.name, **value}, source=f'plugin:{plugin.value}')
    raise InvalidInputError(f'Plugin {plugin.name} does not define a system')


def load_system_plugins() -> Dict[str, SystemSpec]:
    systems = {}
    for plugin in iter_plugins():
        try:
            systems[plugin.name] = resolve_system(plugin)
        except (ImportError, AttributeError, InvalidInputError) as ex:
            logger.warning('Ignoring system plugin %s: %s', plugin.name, ex)
    return systems
