"""
Distinguishability of parameter-functions by the states they produce at an
observation set, and the experiments built on it.
"""
from dataclasses import dataclass, field
from logging import Logger, getLogger
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .classes import CertificationContext, ClassCertificate, certify_all
from .exceptions import AnalysisFailure, InvalidInputError
from .ode import DEFAULT_TOL, ParamFunction, SystemModel, Trajectory, integrate_trajectory
from .processor import RowExecutor
from .zerofinder import ObservationSet

logger = getLogger(__name__)

DEFAULT_EPS_MAX = 1e-1
SEPARATION_FACTOR = 100

Points = Union[ObservationSet, Sequence[float]]


@dataclass(frozen=True)
class DistinguishVerdict:
    distinguished: bool
    witness_point: Optional[float]
    separation: float
    tol_used: float
    differences: Tuple[float, ...] = ()

    def as_dict(self) -> Dict:
        return {
            'distinguished': self.distinguished,
            'witness_point': self.witness_point,
            'separation': self.separation,
            'tol_used': self.tol_used,
            'differences': list(self.differences),
        }


@dataclass(frozen=True)
class ExperimentRow:
    index: int
    direction: str
    epsilon: float
    certified: bool
    verdict: DistinguishVerdict
    certificates: Tuple[ClassCertificate, ...] = ()
    failure_reason: Optional[str] = None
    reduced_verdict: Optional[DistinguishVerdict] = None

    @property
    def counterexample(self) -> bool:
        return self.certified and not self.verdict.distinguished

    def as_dict(self) -> Dict:
        result = {
            'index': self.index,
            'direction': self.direction,
            'epsilon': self.epsilon,
            'certified': self.certified,
            'failure_reason': self.failure_reason,
            'certificates': [c.as_dict() for c in self.certificates],
            'verdict': self.verdict.as_dict(),
        }
        if self.reduced_verdict is not None:
            result['reduced_verdict'] = self.reduced_verdict.as_dict()
        return result


@dataclass
class ExperimentReport:
    system: str
    mode: str
    theta: Tuple[float, ...]
    rows: List[ExperimentRow] = field(default_factory=list)
    eps_max: float = DEFAULT_EPS_MAX
    reduced_theta: Optional[Tuple[float, ...]] = None
    witness: Optional[ExperimentRow] = None

    @property
    def certified_rows(self) -> List[ExperimentRow]:
        return [row for row in self.rows if row.certified]

    @property
    def counterexamples(self) -> List[ExperimentRow]:
        """
        Certified rows with epsilon <= eps_max that are not distinguished.
        """
        return [row for row in self.rows if row.counterexample and row.epsilon <= self.eps_max]

    @property
    def large_eps_failures(self) -> List[ExperimentRow]:
        return [row for row in self.rows if row.counterexample and row.epsilon > self.eps_max]

    @property
    def fraction_distinguished(self) -> Optional[float]:
        rows = self.certified_rows
        if not rows:
            return None
        return sum(row.verdict.distinguished for row in rows) / len(rows)

    @property
    def min_separation(self) -> Optional[float]:
        rows = self.certified_rows
        if not rows:
            return None
        return min(row.verdict.separation for row in rows)

    def as_dict(self) -> Dict:
        result = {
            'system': self.system,
            'mode': self.mode,
            'theta': list(self.theta),
            'eps_max': self.eps_max,
            'rows': [row.as_dict() for row in self.rows],
            'fraction_distinguished': self.fraction_distinguished,
            'min_separation': self.min_separation,
            'counterexamples': [row.index for row in self.counterexamples],
            'large_eps_failures': [row.index for row in self.large_eps_failures],
        }
        if self.reduced_theta is not None:
            result['reduced_theta'] = list(self.reduced_theta)
            result['witness'] = None if self.witness is None else self.witness.index
        return result


def _points(points: Points) -> Tuple[float, ...]:
    values = tuple(float(t) for t in (points.points if isinstance(points, ObservationSet) else points))
    if not values:
        raise InvalidInputError('An observation set needs at least one point')
    return values


def distinguish(system: SystemModel,
                p0: ParamFunction,
                p: ParamFunction,
                points: Points,
                tol: float = None,
                integrator_tol: float = DEFAULT_TOL,
                ref_traj: Trajectory = None) -> DistinguishVerdict:
    """
    Compares the states under p0 and p at every observation point; the pair
    is distinguished when some difference exceeds ``tol``.
    """
    points = _points(points)
    if any(not 0 <= t <= system.T for t in points):
        raise InvalidInputError(f'Observation points must lie in [0, {system.T}]')
    tol = tol if tol is not None else SEPARATION_FACTOR * integrator_tol

    reference = ref_traj or integrate_trajectory(system, p0, integrator_tol)
    perturbed = integrate_trajectory(system, p, integrator_tol)
    differences = tuple(float(np.linalg.norm(perturbed.at(t) - reference.at(t))) if t > 0 else 0.0
                        for t in points)

    witness = next((t for t, d in zip(points, differences) if d > tol), None)
    return DistinguishVerdict(distinguished=witness is not None, witness_point=witness,
                              separation=max(differences), tol_used=tol, differences=differences)


def identifiability_experiment(system: SystemModel,
                               p0: ParamFunction,
                               family: Sequence[ParamFunction],
                               eps_grid: Sequence[float],
                               obs: ObservationSet = None,
                               *,
                               context: CertificationContext = None,
                               eps_max: float = DEFAULT_EPS_MAX,
                               workers: int = 1,
                               tol: float = None,
                               logger: Logger = None) -> ExperimentReport:
    logger = logger or getLogger(__name__)
    if context is None:
        context = CertificationContext.build(system, p0, mode=obs.mode if obs else 'auto')
    obs = obs or context.obs
    integrator_tol = context.path.ref_traj.integrator_tol

    rows = []
    for q in family:
        for eps in eps_grid:
            if eps <= 0:
                logger.warning('Skipping epsilon=%g for %s: perturbations must be nonzero', eps, q.description)
                continue
            rows.append((len(rows), q, float(eps)))

    def evaluate(row) -> ExperimentRow:
        index, q, eps = row
        p = p0 + q.scaled(eps)
        certificates, certified, reason = (), False, None
        try:
            certificates, certified = certify_all(system, obs, p, p0, context)
        except AnalysisFailure as ex:
            reason = str(ex)
        else:
            reason = '; '.join(c.failure_reason for c in certificates if c.failure_reason) or None

        verdict = distinguish(system, p0, p, obs, tol, integrator_tol, ref_traj=context.path.ref_traj)
        logger.debug('Row %d (%s, eps=%g): certified=%s distinguished=%s separation=%.3g', index,
                     q.description, eps, certified, verdict.distinguished, verdict.separation)
        return ExperimentRow(index=index, direction=q.description, epsilon=eps, certified=certified,
                             verdict=verdict, certificates=tuple(certificates), failure_reason=reason)

    logger.info('Running %d identifiability rows on %s...', len(rows), system.name)
    with RowExecutor(workers, logger=logger) as executor:
        results = executor.map(evaluate, rows)

    report = ExperimentReport(system=system.name, mode=obs.mode.value, theta=obs.points,
                              rows=sorted(results, key=lambda r: r.index), eps_max=eps_max)
    for row in report.counterexamples:
        logger.error('Counterexample: %s at epsilon=%g is certified but not distinguished',
                     row.direction, row.epsilon)
    return report


def negative_control(system: SystemModel,
                     p0: ParamFunction,
                     reduced_points: Sequence[float],
                     full_obs: ObservationSet,
                     family: Sequence[ParamFunction],
                     eps: float = DEFAULT_EPS_MAX,
                     *,
                     tol: float = None,
                     integrator_tol: float = DEFAULT_TOL,
                     logger: Logger = None) -> ExperimentReport:
    """
    Looks for a direction that the reduced observation set cannot see but the
    full one can. Every direction is reported with both verdicts.
    """
    logger = logger or getLogger(__name__)
    reduced = _points(reduced_points)
    full = full_obs.points
    radius = 1e-12 * system.T
    if len(reduced) >= len(full) or any(min(abs(t - s) for s in full) > radius for t in reduced):
        raise InvalidInputError('The reduced observation set must be a proper subset of the full one')

    reference = integrate_trajectory(system, p0, integrator_tol)
    report = ExperimentReport(system=system.name, mode=full_obs.mode.value, theta=full, reduced_theta=reduced)
    for index, q in enumerate(family):
        p = p0 + q.scaled(eps)
        full_verdict = distinguish(system, p0, p, full, tol, integrator_tol, ref_traj=reference)
        reduced_verdict = distinguish(system, p0, p, reduced, tol, integrator_tol, ref_traj=reference)
        row = ExperimentRow(index=index, direction=q.description, epsilon=eps, certified=False,
                            verdict=full_verdict, reduced_verdict=reduced_verdict,
                            failure_reason='not certified in a negative control')
        report.rows.append(row)
        if report.witness is None and full_verdict.distinguished and not reduced_verdict.distinguished:
            report.witness = row
            logger.info('Direction %s is invisible at %s but distinguished at %s', q.description,
                        list(reduced), list(full))

    if report.witness is None:
        logger.warning('No direction separates the reduced observation set from the full one')
    return report
