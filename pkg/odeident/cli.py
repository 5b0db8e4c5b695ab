from contextlib import contextmanager

import click

from . import __version__
from .cli_options import experiment_options, general_options, output_options, system_options
from .config import load_analysis_document, resolve_config
from .exceptions import InvalidInputError, OdeIdentError
from .logger import build_logger
from .pipeline import AnalysisPipeline
from .registry import get_system, list_systems as registry_systems
from .report import dumps, write_output


@click.group()
@click.version_option(version=__version__)
def odeident():
    """
    Local identifiability of parameter-functions in ODE systems
    """


def run_odeident():
    odeident(obj={})


@contextmanager
def handle_errors(ctx, stage='parse'):
    try:
        yield
    except OdeIdentError as ex:
        click.echo(f'[{ex.stage or stage}] {ex}', err=True)
        raise ctx.exit(ex.exit_code)


def build_pipeline(config_defaults, system, config, grid, tol, mode, logger, **flags) -> AnalysisPipeline:
    document = load_analysis_document(config) if config else None
    flags = {k: (tuple(v) or None) if isinstance(v, tuple) else v for k, v in flags.items()}
    if system:
        flags['system'] = get_system(system)
    resolved = resolve_config(config_defaults, document, grid=grid, tol=tol, mode=mode.lower() if mode else None,
                              **flags)
    return AnalysisPipeline(resolved, logger=logger)


def emit(ctx, pipeline: AnalysisPipeline, sections, out, fmt='json'):
    with handle_errors(ctx, 'report'):
        if fmt == 'csv':
            text = pipeline.plot_data().to_csv()
        else:
            text = dumps(pipeline.document(**sections))
    write_output(text, out)


@odeident.command(name='analyze')
@general_options
@system_options
@experiment_options
@output_options()
@click.pass_context
def analyze(ctx,
            config_defaults,
            debug,
            # System options
            system,
            config,
            grid,
            tol,
            mode,
            # Experiment options
            direction,
            eps,
            eps_max,
            workers,
            reduced_theta,
            # Output
            out,
            fmt,
            *,
            logger=None):
    """
    Run the full identifiability analysis of a system
    """

    logger = logger or build_logger(config_defaults, debug)

    with handle_errors(ctx):
        pipeline = build_pipeline(config_defaults, system, config, grid, tol, mode, logger, directions=direction,
                                  eps=eps, eps_max=eps_max, workers=workers, reduced_theta=reduced_theta)
        if fmt == 'csv':
            emit(ctx, pipeline, {}, out, fmt)
            return
        report = pipeline.run()

    with handle_errors(ctx, 'report'):
        write_output(dumps(report), out)

    if report['experiment']['counterexamples']:
        click.echo('[experiment] certified perturbations were not distinguished', err=True)
        raise ctx.exit(1)


@odeident.command(name='theta')
@general_options
@system_options
@output_options()
@click.pass_context
def theta(ctx,
          config_defaults,
          debug,
          system,
          config,
          grid,
          tol,
          mode,
          out,
          fmt,
          *,
          logger=None):
    """
    Compute the observation set: zeros of the determinant path and their orders
    """

    logger = logger or build_logger(config_defaults, debug)

    with handle_errors(ctx):
        pipeline = build_pipeline(config_defaults, system, config, grid, tol, mode, logger)
        sections = pipeline.theta_section()

    emit(ctx, pipeline, sections, out, fmt)


@odeident.command(name='check-class')
@general_options
@system_options
@click.option('--direction', '-q',
              type=str,
              multiple=True,
              help='Perturbation direction as an expression of t; may be repeated')
@click.option('--eps',
              type=float,
              help='Size of the certified perturbations p0 + eps*q (defaults to eps-max)')
@output_options()
@click.pass_context
def check_class(ctx,
                config_defaults,
                debug,
                system,
                config,
                grid,
                tol,
                mode,
                direction,
                eps,
                out,
                fmt,
                *,
                logger=None):
    """
    Certify perturbations against the class conditions on every interval
    """

    logger = logger or build_logger(config_defaults, debug)

    with handle_errors(ctx):
        pipeline = build_pipeline(config_defaults, system, config, grid, tol, mode, logger, directions=direction)
        if fmt == 'csv':
            emit(ctx, pipeline, {}, out, fmt)
            return
        sections = pipeline.theta_section()
        sections['certificates'] = pipeline.certificates_section(eps)
        sections['lambda_bounds'] = pipeline.lambda_section()

    emit(ctx, pipeline, sections, out)

    if not all(row['in_class'] for row in sections['certificates']):
        raise ctx.exit(1)


@odeident.command(name='distinguish')
@general_options
@system_options
@click.option('--param', '-p',
              type=str,
              multiple=True,
              required=True,
              help='Parameter-function compared with p0: one expression of t per component, or one broadcast')
@output_options()
@click.pass_context
def distinguish(ctx,
                config_defaults,
                debug,
                system,
                config,
                grid,
                tol,
                mode,
                param,
                out,
                fmt,
                *,
                logger=None):
    """
    Compare the states under p0 and another parameter at the observation set
    """

    logger = logger or build_logger(config_defaults, debug)

    with handle_errors(ctx):
        pipeline = build_pipeline(config_defaults, system, config, grid, tol, mode, logger)
        if fmt == 'csv':
            emit(ctx, pipeline, {}, out, fmt)
            return
        sections = pipeline.theta_section()
        sections['distinguish'] = pipeline.distinguish(param[0] if len(param) == 1 else list(param))

    emit(ctx, pipeline, sections, out)


@odeident.command(name='sweep')
@general_options
@system_options
@experiment_options
@output_options()
@click.pass_context
def sweep(ctx,
          config_defaults,
          debug,
          system,
          config,
          grid,
          tol,
          mode,
          direction,
          eps,
          eps_max,
          workers,
          reduced_theta,
          out,
          fmt,
          *,
          logger=None):
    """
    Certify and distinguish every direction at every perturbation size
    """

    logger = logger or build_logger(config_defaults, debug)

    with handle_errors(ctx):
        pipeline = build_pipeline(config_defaults, system, config, grid, tol, mode, logger, directions=direction,
                                  eps=eps, eps_max=eps_max, workers=workers, reduced_theta=reduced_theta)
        if fmt == 'csv':
            emit(ctx, pipeline, {}, out, fmt)
            return
        sections = pipeline.theta_section()
        experiment = pipeline.experiment()
        control = pipeline.negative_control()
        sections['experiment'] = experiment.as_dict()
        sections['negative_control'] = None if control is None else control.as_dict()

    emit(ctx, pipeline, sections, out)

    if experiment.counterexamples:
        raise ctx.exit(1)


@odeident.command(name='mininorm-path')
@general_options
@system_options
@output_options()
@click.pass_context
def mininorm_path(ctx,
                  config_defaults,
                  debug,
                  system,
                  config,
                  grid,
                  tol,
                  mode,
                  out,
                  fmt,
                  *,
                  logger=None):
    """
    Smallest singular value of D(t) and its slopes at rank-drop points
    """

    logger = logger or build_logger(config_defaults, debug)

    with handle_errors(ctx):
        if mode and mode.lower() != 'h':
            raise InvalidInputError('The mininorm path is computed from det B; use --mode h')
        pipeline = build_pipeline(config_defaults, system, config, grid, tol, 'h', logger)
        sections = pipeline.theta_section()
        sections['mininorm'] = pipeline.mininorm_section()

    emit(ctx, pipeline, sections, out, fmt)


@odeident.command(name='list-systems')
@click.pass_context
def list_systems(ctx):
    """
    List builtin and plugin systems
    """

    with handle_errors(ctx):
        for spec in registry_systems():
            click.echo(f'{spec.name:<18} n={spec.n} l={spec.l} T={spec.T:g}  {spec.description}')
