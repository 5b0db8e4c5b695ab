from configparser import ConfigParser
from functools import update_wrapper
from pathlib import Path

import click

from . import __version__
from .config import load_user_config
from .exceptions import ConfigurationError


def apply_decorators(func, *args):
    fn = func
    for opt in args:
        fn = opt(fn)

    return update_wrapper(fn, func)


class UserConfig(click.ParamType):
    name = 'configfile'

    def __call__(self, value, param=None, ctx=None):
        return self.convert(value, param, ctx)

    def convert(self, value, param, ctx):
        if isinstance(value, ConfigParser):
            return value

        if value:
            value = Path(value)
        try:
            return load_user_config(value)
        except ConfigurationError as ex:
            self.fail(str(ex), param, ctx)


def general_options(func=None):
    def inner(fn):
        return apply_decorators(
            fn,
            click.option(
                '--config-defaults',
                type=UserConfig(),
                default=load_user_config,
                help='Path to an INI file with [logger] and [analysis] defaults'
            ),
            click.option(
                '--debug', '-d',
                type=bool,
                default=False,
                is_flag=True,
                envvar='ODEIDENT_DEBUG',
                help='Debug mode'
            ),
            click.version_option(version=__version__)
        )

    if func:
        return inner(func)
    return inner


def system_options(func=None):
    def inner(fn):
        return apply_decorators(
            fn,
            click.option(
                '--system', '-s',
                type=str,
                help='Name of a registry system'
            ),
            click.option(
                '--config', '-c',
                type=click.Path(exists=True, dir_okay=False),
                envvar='ODEIDENT_CONFIG',
                help='Path to a JSON analysis document (schema_version 1)'
            ),
            click.option(
                '--grid',
                type=int,
                help='Number of sampling points on [0, T]'
            ),
            click.option(
                '--tol',
                type=float,
                help='Integrator tolerance'
            ),
            click.option(
                '--mode',
                type=click.Choice(['k', 'h', 'auto'], case_sensitive=False),
                help='Determinant path: det D (k), det B (h) or k iff n = l (auto)'
            ),
        )

    if func:
        return inner(func)
    return inner


def experiment_options(func=None):
    def inner(fn):
        return apply_decorators(
            fn,
            click.option(
                '--direction', '-q',
                type=str,
                multiple=True,
                help='Perturbation direction as an expression of t, broadcast over all parameter components'
            ),
            click.option(
                '--eps',
                type=float,
                multiple=True,
                help='Perturbation size; may be repeated'
            ),
            click.option(
                '--eps-max',
                type=float,
                help='Largest size at which an undistinguished certified row is a counterexample'
            ),
            click.option(
                '--workers', '-w',
                type=int,
                help='Number of threads evaluating experiment rows'
            ),
            click.option(
                '--reduced-theta',
                type=float,
                multiple=True,
                help='Observation point of a reduced set for the negative control; may be repeated'
            ),
        )

    if func:
        return inner(func)
    return inner


def output_options(func=None):
    def inner(fn):
        return apply_decorators(
            fn,
            click.option(
                '--out', '-o',
                type=click.Path(dir_okay=False, writable=True),
                help='Write the report to this file instead of stdout'
            ),
            click.option(
                '--format', 'fmt',
                type=click.Choice(('json', 'csv'), case_sensitive=False),
                default='json',
                show_default=True,
                help='Report document (json) or plot data columns t, det, detB, mu (csv)'
            ),
        )

    if func:
        return inner(func)
    return inner
