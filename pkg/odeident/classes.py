"""
Per-interval class certificates for a perturbation Delta p = p - p0,
empirical norm-equivalence constants, the mininorm path and the
class-preserving perturbation construction.
"""
from dataclasses import dataclass, field, replace
from enum import Enum
from logging import getLogger
from threading import Lock
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .core import TimeGrid, VectorFunctionSamples, int_norm, sup_norm
from .exceptions import (DegenerateDirectionError, DegeneratePerturbationError, InadmissibleDirectionError,
                         InvalidInputError, NotInClassHError, PartitionInconsistencyError)
from .linalg import mininorm, sym_eigenvalues
from .ode import DEFAULT_TOL, FundamentalMatrix, ParamFunction, SystemModel, fundamental_matrix
from .sensitivity import (SensitivityPath, psi_map, psi_operator_norm, sensitivity_operator_norm,
                          sensitivity_path)
from .zerofinder import Mode, ObservationSet, determinant_function, observation_set

logger = getLogger(__name__)

BETA_FLOOR = 1e-9
KAPPA_FLOOR = 1e-6
KAPPA_GROWTH = 10.0
KAPPA_UNIFORM_SAMPLES = 64
RANK_TOL = 1e-10
SLOPE_STEP = 1e-5

LEFT = 'left'
RIGHT = 'right'


class Variant(str, Enum):
    K1 = 'K1'
    K2 = 'K2'
    K3 = 'K3'
    K4 = 'K4'
    H1 = 'H1'
    H2 = 'H2'
    H3 = 'H3'
    H4 = 'H4'

    @classmethod
    def of(cls, mode: Mode, case: int) -> 'Variant':
        return cls(f'{mode.value.upper()}{case}')

    @property
    def case(self) -> int:
        return int(self.value[1])

    @property
    def sides(self) -> Tuple[str, ...]:
        return {1: (LEFT, RIGHT), 2: (RIGHT,), 3: (LEFT,), 4: ()}[self.case]


@dataclass(frozen=True)
class ClassCertificate:
    interval: Tuple[float, float]
    variant: Variant
    alpha: float
    beta: float
    gamma: Optional[float]
    kappa: Optional[float]
    nu_used: int
    passed: bool
    failure_reason: Optional[str] = None
    psi_norm: Optional[float] = None

    def as_dict(self) -> Dict:
        return {
            'interval': list(self.interval),
            'variant': self.variant.value,
            'alpha': self.alpha,
            'beta': self.beta,
            'gamma': self.gamma,
            'kappa': self.kappa if self.kappa is None or np.isfinite(self.kappa) else None,
            'kappa_diverges': bool(self.kappa is not None and not np.isfinite(self.kappa)),
            'nu_used': self.nu_used,
            'passed': self.passed,
            'failure_reason': self.failure_reason,
            'psi_norm': self.psi_norm,
        }


@dataclass(frozen=True)
class LambdaBound:
    interval: Tuple[float, float]
    lambda_hat: float
    witnesses: Tuple[Tuple[str, float], ...]


@dataclass(frozen=True)
class RankDrop:
    c: float
    h: float
    Lambda: float
    predicted_slope: float
    right_slope: Optional[float]
    left_slope: Optional[float]

    @property
    def one_sided_slope(self) -> float:
        return self.right_slope if self.right_slope is not None else -self.left_slope

    @property
    def discrepancy(self) -> float:
        errors = []
        if self.right_slope is not None:
            errors.append(abs(self.right_slope - self.predicted_slope))
        if self.left_slope is not None:
            errors.append(abs(self.left_slope + self.predicted_slope))
        return max(errors) if errors else 0.0


@dataclass(frozen=True)
class MininormPath:
    grid: TimeGrid
    mu_values: np.ndarray
    rank_drop_points: Tuple[RankDrop, ...]


@dataclass
class CertificationContext:
    """
    Reference objects shared by every certificate of one system: the
    sensitivity path, the observation set and fundamental matrices by base time.
    """
    system: SystemModel
    path: SensitivityPath
    obs: ObservationSet
    tol: float = DEFAULT_TOL
    _fundamentals: Dict[float, FundamentalMatrix] = field(default_factory=dict, repr=False)
    _lock: Lock = field(default_factory=Lock, repr=False, compare=False)

    @classmethod
    def build(cls, system: SystemModel, p0: ParamFunction, mode='auto', grid: TimeGrid = None,
              tol: float = DEFAULT_TOL) -> 'CertificationContext':
        path = sensitivity_path(system, p0, grid, tol)
        return cls(system=system, path=path, obs=observation_set(system, p0, mode, path=path, tol=tol), tol=tol)

    def fundamental(self, tau: float) -> FundamentalMatrix:
        with self._lock:
            if tau not in self._fundamentals:
                self._fundamentals[tau] = fundamental_matrix(self.system, self.path.ref_traj, tau, self.tol)
            return self._fundamentals[tau]


def _samples(func: ParamFunction, grid: TimeGrid) -> VectorFunctionSamples:
    return VectorFunctionSamples(grid, func.sample(grid.points))


def estimate_alpha(dp: ParamFunction, tau: float, theta: float, grid: TimeGrid = None) -> float:
    """
    Tight constant in ||dp||_i >= alpha ||dp|| on [tau, theta].
    """
    grid = grid or TimeGrid.uniform(tau, theta)
    samples = _samples(dp, grid)
    peak = sup_norm(samples)
    if peak == 0.0:
        raise DegeneratePerturbationError(f'Perturbation vanishes identically on [{tau:.6g}, {theta:.6g}]')
    return int_norm(samples) / peak


def _weighted_norm(path: SensitivityPath, dp: ParamFunction, grid: TimeGrid) -> float:
    """
    ||D dp||_i on the grid span.
    """
    D = path.D_many(grid.points)
    return int_norm(VectorFunctionSamples(grid, np.einsum('kij,kj->ki', D, dp.sample(grid.points))))


def estimate_beta(system: SystemModel, path: SensitivityPath, Y: FundamentalMatrix, dp: ParamFunction,
                  tau: float, theta: float) -> float:
    """
    Tight constant in |Psi(dp)| >= beta ||D dp||_i on [tau, theta].
    """
    kernel = path.kernel(Y, tau, theta)
    d_dp = int_norm(VectorFunctionSamples(kernel.grid, np.einsum('kij,kj->ki', kernel.D,
                                                                 dp.sample(kernel.grid.points))))
    if d_dp == 0.0:
        raise DegenerateDirectionError(f'D dp vanishes identically on [{tau:.6g}, {theta:.6g}]')
    return psi_map(system, path, Y, tau, theta, dp).norm / d_dp


def _window_distances(gamma: float, floor: float) -> Tuple[np.ndarray, np.ndarray]:
    uniform = gamma * np.arange(1, KAPPA_UNIFORM_SAMPLES) / KAPPA_UNIFORM_SAMPLES
    geometric = gamma * 10.0 ** -np.arange(1, 40, dtype=float)
    geometric = np.append(geometric[geometric >= 2 * floor], floor)
    return uniform, geometric


def _side_kappa(path: SensitivityPath, func: ParamFunction, tau: float, theta: float, nu: int, gamma: float,
                side: str, scale: float) -> Tuple[bool, float]:
    """
    sup of |D(t) func(t)| / (dist^nu * scale) over the one-sided window,
    and whether the ratio stays bounded towards the zero.
    """
    uniform, geometric = _window_distances(gamma, KAPPA_FLOOR * (theta - tau))
    distances = np.concatenate([uniform, geometric])
    ts = tau + distances if side == LEFT else theta - distances
    D = path.D_many(ts)
    values = np.linalg.norm(np.einsum('kij,kj->ki', D, func.sample(ts)), axis=1)
    ratios = values / (distances ** nu * scale)

    tail = ratios[-3:]
    if tail[2] > tail[1] > tail[0] and tail[2] > KAPPA_GROWTH * tail[0]:
        return False, np.inf
    return True, float(np.max(ratios))


def check_kappa(path: SensitivityPath, dp: ParamFunction, tau: float, theta: float, nu: int, gamma: float,
                side: str) -> Tuple[bool, float]:
    if not 0 < gamma < theta - tau:
        raise InvalidInputError(f'gamma={gamma} must lie in (0, {theta - tau})')
    if side not in (LEFT, RIGHT):
        raise InvalidInputError(f'Unknown window side: {side}')
    scale = sup_norm(_samples(dp, path.sub_grid(tau, theta)))
    if scale == 0.0:
        raise DegeneratePerturbationError(f'Perturbation vanishes identically on [{tau:.6g}, {theta:.6g}]')
    return _side_kappa(path, dp, tau, theta, nu, gamma, side, scale)


def classify_interval(detv_tau: float, detv_theta: float, tau: float, theta: float, T: float, zero_tol: float,
                      mode: Mode = Mode.K) -> Variant:
    left = abs(detv_tau) <= zero_tol
    right = abs(detv_theta) <= zero_tol
    at_start = tau == 0.0
    at_end = theta == T

    if left and right:
        return Variant.of(mode, 1)
    if right and at_start:
        return Variant.of(mode, 2)
    if left and at_end:
        return Variant.of(mode, 3)
    if not left and not right and at_start and at_end:
        return Variant.of(mode, 4)
    raise PartitionInconsistencyError(f'Interval [{tau:.6g}, {theta:.6g}] has an endpoint where det does not '
                                      f'vanish inside (0, {T})')


def _default_gamma(obs: ObservationSet, index: int, tau: float, theta: float) -> float:
    windows = [record.window for record in (obs.record_at(index), obs.record_at(index + 1))
               if record is not None and record.window > 0]
    return min([0.5 * (theta - tau)] + windows)


def certify_membership(system: SystemModel,
                       obs: ObservationSet,
                       p: ParamFunction,
                       p0: ParamFunction,
                       interval_index: int,
                       *,
                       context: CertificationContext = None,
                       gamma: float = None) -> ClassCertificate:
    if not 0 <= interval_index < len(obs.intervals):
        raise InvalidInputError(f'Interval index {interval_index} is outside [0, {len(obs.intervals) - 1}]')
    context = context or CertificationContext(system=system, path=sensitivity_path(system, p0), obs=obs)
    path = context.path
    tau, theta = obs.intervals[interval_index]
    dp = p - p0
    grid = path.sub_grid(tau, theta)

    alpha = estimate_alpha(dp, tau, theta, grid)

    g = obs.det_function or determinant_function(path, obs.mode)
    detv_tau = 0.0 if obs.orders[interval_index] > 0 else g(tau)
    detv_theta = 0.0 if obs.orders[interval_index + 1] > 0 else g(theta)
    variant = classify_interval(detv_tau, detv_theta, tau, theta, system.T, obs.touch, obs.mode)

    if obs.mode is Mode.K:
        nu = max(obs.orders[interval_index], obs.orders[interval_index + 1])
    else:
        nu = 1

    Y = context.fundamental(tau)
    psi_norm = psi_operator_norm(system, path, Y, tau, theta)
    reasons = []
    try:
        beta = estimate_beta(system, path, Y, dp, tau, theta)
    except DegenerateDirectionError as ex:
        beta = 0.0
        reasons.append(str(ex))
    else:
        if beta <= BETA_FLOOR:
            reasons.append(f'Psi vanishes on the perturbation (beta={beta:.3g})')

    gamma_used, kappa = None, None
    if variant.sides:
        gamma_used = gamma or _default_gamma(obs, interval_index, tau, theta)
        scale = sup_norm(_samples(dp, grid))
        kappa = 0.0
        for side in variant.sides:
            holds, side_kappa = _side_kappa(path, dp, tau, theta, nu, gamma_used, side, scale)
            kappa = max(kappa, side_kappa)
            if not holds:
                reasons.append(f'|D dp| does not vanish with order {nu} at the {side} end of '
                               f'[{tau:.6g}, {theta:.6g}]')

    certificate = ClassCertificate(interval=(tau, theta), variant=variant, alpha=alpha, beta=beta,
                                   gamma=gamma_used, kappa=kappa, nu_used=nu, passed=not reasons,
                                   failure_reason='; '.join(reasons) or None, psi_norm=psi_norm)
    logger.debug('Certificate %s on [%.6g, %.6g]: %s', variant.value, tau, theta,
                 'passed' if certificate.passed else certificate.failure_reason)
    return certificate


def certify_all(system: SystemModel, obs: ObservationSet, p: ParamFunction, p0: ParamFunction,
                context: CertificationContext = None) -> Tuple[List[ClassCertificate], bool]:
    """
    Certificates on every interval of the partition; the flag tells whether
    p lies in the intersection of the per-interval classes.
    """
    certificates = [certify_membership(system, obs, p, p0, k, context=context) for k in range(len(obs.intervals))]
    return certificates, all(c.passed for c in certificates)


def lambda_bound(path: SensitivityPath, interval: Tuple[float, float],
                 witnesses: Sequence[ParamFunction]) -> LambdaBound:
    if not witnesses:
        raise InvalidInputError('lambda_bound needs at least one witness')
    tau, theta = interval
    grid = path.sub_grid(tau, theta)
    ratios = []
    for r in witnesses:
        r_norm = int_norm(_samples(r, grid))
        if r_norm == 0.0:
            raise DegeneratePerturbationError(f'Witness {r.description} vanishes on [{tau:.6g}, {theta:.6g}]')
        ratios.append((r.description, _weighted_norm(path, r, grid) / r_norm))
    return LambdaBound(interval=(tau, theta), lambda_hat=min(ratio for _, ratio in ratios), witnesses=tuple(ratios))


def mininorm_path(path: SensitivityPath, obs: ObservationSet) -> MininormPath:
    """
    mu(D(t)) along the grid, and at every rank-drop point the slope
    h_c / sqrt(Lambda_c) next to one-sided difference quotients of mu.
    """
    if obs.mode is not Mode.H:
        raise InvalidInputError('The mininorm path needs an observation set built in mode H')
    mu_values = np.array([mininorm(D) for D in path.D_values])
    T = path.system.T
    step = SLOPE_STEP * T

    def mu(t):
        return mininorm(path.D_at(t))

    drops = []
    records = [obs.endpoint_records[0], *obs.records, obs.endpoint_records[1]]
    for record in (r for r in records if r is not None):
        c = record.tau
        # The smallest eigenvalue is the one vanishing at c; the rest must exceed RANK_TOL ||B(c)||.
        eigenvalues = sym_eigenvalues(path.B_at(c), psd=True)
        rest = eigenvalues[1:]
        if rest.size and rest[0] <= RANK_TOL * eigenvalues[-1]:
            raise NotInClassHError(f'B({c:.6g}) has a multiple zero eigenvalue')
        Lambda = float(np.prod(rest))
        right = (mu(c + 2 * step) - mu(c + step)) / step if c + 2 * step <= T else None
        left = (mu(c - step) - mu(c - 2 * step)) / step if c - 2 * step >= 0 else None
        drops.append(RankDrop(c=c, h=record.h, Lambda=Lambda, predicted_slope=record.h / np.sqrt(Lambda),
                              right_slope=right, left_slope=left))

    return MininormPath(grid=path.grid, mu_values=mu_values, rank_drop_points=tuple(drops))


def kappa_from_vanishing_order(path: SensitivityPath, dp: ParamFunction, tau: float, theta: float,
                               kappa0: float) -> float:
    """
    kappa = kappa0 ||D||_i / ||dp|| for perturbations with |dp(t)| <= kappa0 dist^nu near a zero.
    """
    scale = sup_norm(_samples(dp, path.sub_grid(tau, theta)))
    if scale == 0.0:
        raise DegeneratePerturbationError(f'Perturbation vanishes identically on [{tau:.6g}, {theta:.6g}]')
    return kappa0 * sensitivity_operator_norm(path, tau, theta) / scale


def inherited_certificate(base_cert: ClassCertificate) -> ClassCertificate:
    return replace(base_cert,
                   alpha=base_cert.alpha / 4,
                   beta=base_cert.beta / 4,
                   kappa=None if base_cert.kappa is None else 4 * base_cert.kappa)


def perturb_within_class(base_cert: ClassCertificate,
                         system: SystemModel,
                         path: SensitivityPath,
                         Y: FundamentalMatrix,
                         p: ParamFunction,
                         p0: ParamFunction,
                         q_raw: ParamFunction) -> Tuple[ParamFunction, ClassCertificate]:
    """
    Scales q_raw so that p + c q_raw stays in the class certified by
    base_cert, with constants (alpha/4, beta/4, gamma, 4 kappa).
    """
    if not base_cert.passed:
        raise InvalidInputError('Only a passed certificate can be inherited')
    tau, theta = base_cert.interval
    grid = path.sub_grid(tau, theta)
    q_samples = _samples(q_raw, grid)
    q_sup = sup_norm(q_samples)
    if q_sup == 0.0:
        return p, inherited_certificate(base_cert)

    dp = p - p0
    dp_sup = sup_norm(_samples(dp, grid))
    d_dp = _weighted_norm(path, dp, grid)
    psi_norm = base_cert.psi_norm or psi_operator_norm(system, path, Y, tau, theta)
    d_norm = sensitivity_operator_norm(path, tau, theta)

    integral_bound = min(base_cert.beta * d_dp / (2 * psi_norm), d_dp / d_norm, 0.5 * base_cert.alpha * dp_sup)
    c = min(0.5 * dp_sup / q_sup, integral_bound / int_norm(q_samples))

    for side in base_cert.variant.sides:
        holds, q_kappa = _side_kappa(path, q_raw, tau, theta, base_cert.nu_used, base_cert.gamma, side, dp_sup)
        if not holds:
            raise InadmissibleDirectionError(f'|D q| does not vanish with order {base_cert.nu_used} at the {side} '
                                             f'end of [{tau:.6g}, {theta:.6g}]')
        if q_kappa > 0:
            c = min(c, base_cert.kappa / q_kappa)

    logger.debug('Class-preserving step on [%.6g, %.6g]: c=%.6g', tau, theta, c)
    return p + q_raw.scaled(c), inherited_certificate(base_cert)
