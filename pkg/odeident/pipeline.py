"""
The analysis pipeline: reference trajectory, sensitivity path, zeros and
observation set, certificates, experiments and the report document.
"""
import time
from contextlib import contextmanager
from logging import Logger, getLogger
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .classes import CertificationContext, certify_all, lambda_bound, mininorm_path
from .config import AnalysisConfig
from .exceptions import AnalysisFailure, InvalidInputError, OdeIdentError
from .identifiability import ExperimentReport, distinguish, identifiability_experiment, negative_control
from .ode import ParamFunction, integrate_trajectory
from .registry import DEFAULT_DIRECTIONS, DEFAULT_EPS, directions, parse_param
from .report import PlotData
from .sensitivity import sensitivity_path
from .zerofinder import Mode, ObservationSet, ZeroRecord, observation_set


def _record(record: Optional[ZeroRecord]) -> Optional[Dict]:
    if record is None:
        return None
    return {'tau': record.tau, 'nu': record.nu, 'h': record.h, 'residual': record.residual,
            'window': record.window, 'one_sided': record.one_sided}


def _summary(values: np.ndarray) -> Dict:
    return {
        'min': float(np.min(values)),
        'max': float(np.max(values)),
        'min_abs': float(np.min(np.abs(values))),
        'sign_changes': int(np.count_nonzero(values[:-1] * values[1:] < 0)),
    }


class AnalysisPipeline:

    def __init__(self,
                 config: AnalysisConfig,
                 logger: Logger = None):
        if config.system is None:
            raise InvalidInputError('No system given; use --system NAME or a configuration document')

        self.config = config
        self.logger = logger or getLogger(__name__)
        self.timings: Dict[str, float] = {}

        self.system = None
        self.p0: Optional[ParamFunction] = None
        self.context: Optional[CertificationContext] = None
        self._directions: List[ParamFunction] = []
        self._witnesses: List[ParamFunction] = []

    @contextmanager
    def stage(self, name: str):
        start = time.perf_counter()
        try:
            yield
        except OdeIdentError as ex:
            ex.stage = ex.stage or name
            raise
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - start

    @property
    def mode(self) -> Mode:
        return Mode.resolve(self.config.mode if self.config.mode != 'auto' else self.config.system.mode,
                            self.config.system.n, self.config.system.l)

    @property
    def obs(self) -> ObservationSet:
        return self.context.obs

    def parse(self):
        if self.system is not None:
            return self.system, self.p0
        with self.stage('parse'):
            self.system, self.p0 = self.config.system.build()
            self.p0.check_derivative(0.0, self.system.T, np.random.default_rng(self.config.seed))
            self._directions = directions(self.config.directions or DEFAULT_DIRECTIONS, self.system.l)
            self._witnesses = directions(self.config.witnesses, self.system.l) if self.config.witnesses else []
        return self.system, self.p0

    def prepare(self):
        """
        Runs the stages every command shares, up to the observation set.
        """
        if self.context is not None:
            return self.context
        self.parse()
        grid = self.system.default_grid(self.config.grid)

        with self.stage('trajectory'):
            self.logger.info('Integrating reference trajectory of %s...', self.system.name)
            ref_traj = integrate_trajectory(self.system, self.p0, self.config.tol, grid)

        with self.stage('sensitivity'):
            self.logger.info('Evaluating sensitivity path...')
            path = sensitivity_path(self.system, self.p0, grid, self.config.tol, ref_traj=ref_traj)

        with self.stage('zeros'):
            obs = observation_set(self.system, self.p0, self.mode, path=path, tol=self.config.tol)
            self.logger.info('Observation set: %s', ', '.join(f'{t:.12g}' for t in obs.points))

        self.context = CertificationContext(system=self.system, path=path, obs=obs, tol=self.config.tol)
        return self.context

    def theta_section(self) -> Dict:
        self.prepare()
        obs = self.obs
        path = self.context.path
        determinant = {'mode': obs.mode.value, 'det_B': _summary(np.linalg.det(path.B_values))}
        if self.system.n == self.system.l:
            determinant['det_D'] = _summary(np.linalg.det(path.D_values))

        return {
            'determinant': determinant,
            'observation_set': {
                'mode': obs.mode.value,
                'points': list(obs.points),
                'orders': list(obs.orders),
                'zeros': [_record(r) for r in obs.records],
                'endpoint_zeros': [_record(r) for r in obs.endpoint_records],
                'simple_zeros_only': obs.simple_zeros_only,
                'endpoint_orders_fitted': obs.endpoint_orders_fitted,
                'touch': obs.touch,
            },
        }

    def certificates_section(self, scale: float = None) -> List[Dict]:
        self.prepare()
        scale = scale if scale is not None else self.config.eps_max
        rows = []
        with self.stage('certify'):
            for q in self._directions:
                p = self.p0 + q.scaled(scale)
                try:
                    certificates, in_class = certify_all(self.system, self.obs, p, self.p0, self.context)
                except AnalysisFailure as ex:
                    self.logger.warning('Direction %s cannot be certified: %s', q.description, ex)
                    rows.append({'direction': q.description, 'epsilon': scale, 'in_class': False,
                                 'error': str(ex), 'certificates': []})
                    continue
                rows.append({'direction': q.description, 'epsilon': scale, 'in_class': in_class,
                             'error': None, 'certificates': [c.as_dict() for c in certificates]})
        return rows

    def lambda_section(self) -> List[Dict]:
        if not self._witnesses:
            return []
        with self.stage('certify'):
            bounds = [lambda_bound(self.context.path, interval, self._witnesses) for interval in self.obs.intervals]
        return [{'interval': list(b.interval), 'lambda_hat': b.lambda_hat,
                 'witnesses': [{'direction': d, 'ratio': r} for d, r in b.witnesses]} for b in bounds]

    def experiment(self) -> ExperimentReport:
        self.prepare()
        with self.stage('experiment'):
            return identifiability_experiment(self.system, self.p0, self._directions,
                                              self.config.eps or DEFAULT_EPS, self.obs, context=self.context,
                                              eps_max=self.config.eps_max, workers=self.config.workers,
                                              logger=self.logger)

    def negative_control(self, reduced: Sequence[float] = None) -> Optional[ExperimentReport]:
        reduced = reduced or self.config.reduced_theta
        if not reduced:
            return None
        self.prepare()
        with self.stage('experiment'):
            return negative_control(self.system, self.p0, reduced, self.obs, self._directions, self.config.eps_max,
                                    integrator_tol=self.config.tol, logger=self.logger)

    def mininorm_section(self) -> Optional[Dict]:
        self.prepare()
        if self.obs.mode is not Mode.H:
            return None
        with self.stage('mininorm'):
            result = mininorm_path(self.context.path, self.obs)
        return {
            'min_mu': float(np.min(result.mu_values)),
            'max_mu': float(np.max(result.mu_values)),
            'rank_drop_points': [{'c': d.c, 'h': d.h, 'Lambda': d.Lambda, 'predicted_slope': d.predicted_slope,
                                  'right_slope': d.right_slope, 'left_slope': d.left_slope,
                                  'discrepancy': d.discrepancy} for d in result.rank_drop_points],
        }

    def plot_data(self) -> PlotData:
        self.prepare()
        with self.stage('report'):
            return PlotData.from_path(self.context.path, self.obs.mode)

    def distinguish(self, p_texts) -> Dict:
        self.parse()
        with self.stage('parse'):
            p = parse_param(p_texts, self.system.l)
        self.prepare()
        with self.stage('experiment'):
            verdict = distinguish(self.system, self.p0, p, self.obs, integrator_tol=self.config.tol,
                                  ref_traj=self.context.path.ref_traj)
        return {'parameter': p.description, 'verdict': verdict.as_dict()}

    def document(self, **sections) -> Dict:
        report = {
            'schema_version': 1,
            'version': __version__,
            'config': self.config.as_dict(),
            'system': self.config.system.as_dict(),
            'grid': {'size': self.config.grid, 'tol': self.config.tol},
        }
        report.update(sections)
        report['timings'] = dict(self.timings)
        return report

    def run(self) -> Dict:
        """
        The full analysis; the returned document is identical across runs
        apart from its ``timings`` entry.
        """
        sections = self.theta_section()
        sections['certificates'] = self.certificates_section()
        sections['lambda_bounds'] = self.lambda_section()
        experiment = self.experiment()
        sections['experiment'] = experiment.as_dict()
        control = self.negative_control()
        sections['negative_control'] = None if control is None else control.as_dict()
        sections['mininorm'] = self.mininorm_section()

        if experiment.counterexamples:
            self.logger.error('%d certified perturbation(s) are not distinguished', len(experiment.counterexamples))
        return self.document(**sections)


def run_pipeline(config: AnalysisConfig, logger: Logger = None) -> Dict:
    return AnalysisPipeline(config, logger=logger).run()
