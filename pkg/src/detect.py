"""Model-based mooring fault detection: Kalman residuals scored by Mahalanobis distance."""
import logging
import typing as t
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg

import custom_errors as ce
import linmodel
import plant
import state_space as ss

logger = logging.getLogger(__name__)

# State index of each tuned Q entry, paired with the output channel it drives
TUNED_STATES = {'rotor': (0, 0), 'surge': (1, 1), 'pitch': (5, 2)}


@dataclass(frozen=True)
class DetectorSettings:
    alpha: float = 6.0
    hold: int = 3
    baseline_start: float = 200.0
    baseline_stop: float = 1400.0
    min_baseline_samples: int = 1000
    q_rotor: float = 1e-8
    q_surge: float = 1e-8
    q_pitch: float = 1e-10
    q_other: float = 0.0
    q_tuning_passes: int = 8
    q_tuning_tolerance: float = 0.2
    r_floor: tuple[float, float, float] = (1e-5, 1e-4, 1e-6)
    noise: tuple[float, float, float] = (0.005, 0.02, 0.001)
    dare_tol: float = 1e-12
    dare_max_iter: int = 100_000

    @classmethod
    def from_config(cls, config) -> 'DetectorSettings':
        detector, noise = config.section('detector'), config.section('noise')
        return cls(
            alpha=float(detector['alpha']),
            hold=int(detector['hold']),
            baseline_start=float(detector['baseline_start']),
            baseline_stop=float(detector['baseline_stop']),
            min_baseline_samples=int(detector['min_baseline_samples']),
            q_rotor=float(detector['q_rotor']),
            q_surge=float(detector['q_surge']),
            q_pitch=float(detector['q_pitch']),
            q_other=float(detector['q_other']),
            q_tuning_passes=int(detector['q_tuning_passes']),
            q_tuning_tolerance=float(detector['q_tuning_tolerance']),
            r_floor=tuple(float(value) for value in detector['r_floor']),
            noise=(float(noise['rotor_speed']), float(noise['surge']), float(noise['pitch'])),
            dare_tol=float(detector['dare_tol']),
            dare_max_iter=int(detector['dare_max_iter']),
        )


class BaselineStatistics(t.NamedTuple):
    z_bar: np.ndarray
    sigma: np.ndarray
    mean_d: float
    std_d: float


@dataclass(frozen=True)
class DetectorModel:
    """Calibrated observer plus residual statistics.

    The observer works in deviations from the operating point: `u_op` and
    `y_op` are subtracted from the measured inputs and outputs.
    """
    sys: ss.StateSpaceModel
    l_gain: np.ndarray
    q_cov: np.ndarray
    r_cov: np.ndarray
    z_bar: np.ndarray
    sigma: np.ndarray
    mean_d: float
    std_d: float
    alpha: float
    d_threshold: float
    u_op: np.ndarray = field(default_factory=lambda: np.zeros(4))
    y_op: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @cached_property
    def sigma_factor(self) -> np.ndarray:
        return _cholesky(self.sigma)

    @property
    def false_alarm_bound(self) -> float:
        return 1.0 / self.alpha ** 2

    def closed_loop_radius(self) -> float:
        poles = np.linalg.eigvals(self.sys.a - self.l_gain @ self.sys.c)
        return float(np.max(np.abs(poles))) if poles.size else 0.0


@dataclass(frozen=True)
class DetectionReport:
    t: np.ndarray
    d_series: np.ndarray
    threshold: float
    raw_alarm: np.ndarray
    confirmed_alarm: np.ndarray
    alarms: list[tuple[float, float]]
    first_confirmed_alarm: float | None
    detection_delay: float | None
    far: float
    fault_time: float | None
    false_alarm_bound: float

    @property
    def detected(self) -> bool:
        return self.detection_delay is not None

    def as_text(self) -> str:
        def fmt(value: float | None) -> str:
            return 'none' if value is None else f'{value:.6g}'

        lines = {
            'threshold': fmt(self.threshold),
            'false_alarm_bound': fmt(self.false_alarm_bound),
            'fault_time': fmt(self.fault_time),
            'first_confirmed_alarm': fmt(self.first_confirmed_alarm),
            'detection_delay': fmt(self.detection_delay),
            'far': fmt(self.far),
            'raw_alarms': str(len(self.alarms)),
            'max_d': fmt(float(np.max(self.d_series)) if self.d_series.size else None),
        }
        return ''.join(f'{key}={value}\n' for key, value in lines.items())


def _cholesky(sigma: np.ndarray) -> np.ndarray:
    try:
        return scipy.linalg.cholesky(sigma, lower=True)
    except np.linalg.LinAlgError as error:
        raise ce.NumericalError(
            'Residual covariance is not positive definite, collect more healthy data or review the output channels'
        ) from error


def solve_dare_gain(
    sys: ss.StateSpaceModel,
    q_cov: np.ndarray,
    r_cov: np.ndarray,
    tol: float = 1e-12,
    max_iter: int = 100_000,
) -> tuple[np.ndarray, np.ndarray]:
    """Steady-state predictor Kalman gain by fixed-point iteration of the Riccati recursion.

    Returns (P, L) with L = A P C' (C P C' + R)^-1 for x+ = A x + B u + L (y - C x).
    """
    a, c = sys.a, sys.c
    q_cov, r_cov = np.atleast_2d(q_cov), np.atleast_2d(r_cov)
    try:
        np.linalg.cholesky(r_cov)
    except np.linalg.LinAlgError as error:
        raise ce.ValidationError('Measurement noise covariance must be positive definite') from error

    p_cov = q_cov.copy()
    trace: list[str] = []
    for iteration in range(1, max_iter + 1):
        innovation = c @ p_cov @ c.T + r_cov
        gain = scipy.linalg.solve(innovation, c @ p_cov @ a.T, assume_a='pos').T
        update = a @ p_cov @ a.T - gain @ innovation @ gain.T + q_cov
        update = 0.5 * (update + update.T)
        scale = np.linalg.norm(update)
        increment = np.linalg.norm(update - p_cov)
        if iteration in (1, 10, 100, 1000, 10000):
            trace.append(f'{iteration}: {increment:.3e}')
        if not np.isfinite(scale) or scale > 1e100:
            raise ce.NumericalError(f'Riccati iteration diverged (increments {", ".join(trace)})')
        if scale > 0 and np.min(np.linalg.eigvalsh(update)) < -1e-9 * scale:
            raise ce.NumericalError(f'Riccati iterate became indefinite at iteration {iteration} '
                                    f'(increments {", ".join(trace)})')
        p_cov = update
        if increment <= tol * max(scale, np.finfo(float).tiny):
            break
    else:
        raise ce.NumericalError(f'Riccati iteration did not converge in {max_iter} steps (increments {", ".join(trace)})')

    innovation = c @ p_cov @ c.T + r_cov
    l_gain = scipy.linalg.solve(innovation, c @ p_cov @ a.T, assume_a='pos').T
    logger.debug(f'Riccati iteration converged after {iteration} steps')
    return p_cov, l_gain


def observer_step(
    det: DetectorModel,
    x_hat: np.ndarray,
    u: np.ndarray,
    y: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    sys = det.sys
    y_hat = sys.c @ x_hat
    z = y - y_hat
    return sys.a @ x_hat + sys.b @ u + det.l_gain @ z, y_hat, z


def residual_series(
    sys: ss.StateSpaceModel,
    l_gain: np.ndarray,
    u: np.ndarray,
    y: np.ndarray,
) -> np.ndarray:
    """Innovations of the observer over a whole record of deviation inputs and outputs"""
    a_closed = sys.a - l_gain @ sys.c
    x_hat = np.zeros(sys.n)
    z = np.empty_like(y)
    for k in range(y.shape[0]):
        z[k] = y[k] - sys.c @ x_hat
        x_hat = a_closed @ x_hat + sys.b @ u[k] + l_gain @ y[k]
    return z


def mahalanobis_distance(
    z: np.ndarray,
    z_bar: np.ndarray,
    sigma: np.ndarray,
    factor: np.ndarray | None = None,
) -> np.ndarray | float:
    """sqrt((z - z_bar)' sigma^-1 (z - z_bar)) for one residual or a series of them (rows)"""
    factor = _cholesky(sigma) if factor is None else factor
    deviation = np.asarray(z, dtype=float) - z_bar
    whitened = scipy.linalg.solve_triangular(factor, deviation.T, lower=True)
    distance = np.sqrt(np.sum(whitened ** 2, axis=0))
    return float(distance) if deviation.ndim == 1 else distance


def baseline_statistics(
    z_series: np.ndarray,
    discard: int = 0,
    min_samples: int = 1000,
) -> BaselineStatistics:
    retained = np.asarray(z_series, dtype=float)[discard:]
    if retained.shape[0] < min_samples:
        raise ce.ConfigurationError(f'Baseline has {retained.shape[0]} samples, at least {min_samples} are needed')
    z_bar = retained.mean(axis=0)
    sigma = np.atleast_2d(np.cov(retained, rowvar=False))
    eigenvalues = np.linalg.eigvalsh(sigma)
    resolution = (1e-12 * np.maximum(np.abs(z_bar), np.finfo(float).tiny)) ** 2
    if np.any(np.diag(sigma) <= resolution) or eigenvalues[0] <= 1e-12 * eigenvalues[-1]:
        raise ce.NumericalError(
            'Residual covariance is singular, collect more healthy data or review the output channels'
        )
    d = mahalanobis_distance(retained, z_bar, sigma)
    return BaselineStatistics(z_bar=z_bar, sigma=sigma, mean_d=float(d.mean()), std_d=float(d.std(ddof=1)))


def chebyshev_threshold(mean_d: float, std_d: float, alpha: float) -> tuple[float, float]:
    """Threshold mean_d + alpha * std_d with its guaranteed false-alarm bound 1 / alpha^2"""
    if not std_d > 0:
        raise ce.DomainError(f'Distance spread must be positive, got {std_d}')
    if not alpha > 1:
        raise ce.DomainError(f'Threshold multiplier must exceed 1, got {alpha}')
    return mean_d + alpha * std_d, 1.0 / alpha ** 2


def run_detection(
    det: DetectorModel,
    run: plant.RunRecord,
    hold: int = 3,
    fault_time: float | None = None,
    transient: float = 200.0,
) -> DetectionReport:
    """Stream the observer over a run and confirm alarms after `hold` consecutive exceedances"""
    if abs(run.dt_out - det.sys.dt) > 1e-12:
        raise ce.ConfigurationError(f'Run sampled at {run.dt_out} s but the detector works at {det.sys.dt} s')
    if hold < 1:
        raise ce.DomainError(f'Alarm hold must be at least one sample, got {hold}')
    if fault_time is None and run.fault_log:
        fault_time = min(event.time for event in run.fault_log)

    samples = run.t.size
    d_series = np.empty(samples)
    raw = np.zeros(samples, dtype=bool)
    confirmed = np.zeros(samples, dtype=bool)
    alarms: list[tuple[float, float]] = []
    x_hat = np.zeros(det.sys.n)
    factor = det.sigma_factor
    streak = 0
    for k in range(samples):
        x_hat, _, z = observer_step(det, x_hat, run.u[k] - det.u_op, run.y[k] - det.y_op)
        d = mahalanobis_distance(z, det.z_bar, det.sigma, factor)
        d_series[k] = d
        if d > det.d_threshold:
            raw[k] = True
            alarms.append((float(run.t[k]), d))
            streak += 1
        else:
            streak = 0
        confirmed[k] = streak >= hold

    confirmed_times = run.t[confirmed]
    first = float(confirmed_times[0]) if confirmed_times.size else None
    delay = None
    if fault_time is not None:
        after = confirmed_times[confirmed_times >= fault_time - 1e-9]
        delay = float(after[0] - fault_time) if after.size else None
    healthy = run.t >= transient
    if fault_time is not None:
        healthy &= run.t < fault_time - 1e-9
    far = float(np.mean(raw[healthy])) if np.any(healthy) else 0.0
    if delay is not None:
        logger.info(f'Fault at {fault_time} s confirmed after {delay:.1f} s')
    elif fault_time is not None:
        logger.info(f'Fault at {fault_time} s was not confirmed')
    return DetectionReport(
        t=run.t, d_series=d_series, threshold=det.d_threshold, raw_alarm=raw, confirmed_alarm=confirmed,
        alarms=alarms, first_confirmed_alarm=first, detection_delay=delay, far=far, fault_time=fault_time,
        false_alarm_bound=det.false_alarm_bound,
    )


def _process_noise(sys: ss.StateSpaceModel, levels: dict[str, float], other: float) -> np.ndarray:
    diagonal = np.full(sys.n, other)
    for name, (state, _) in TUNED_STATES.items():
        diagonal[state] = levels[name]
    return np.diag(diagonal)


def calibrate_detector(
    model: linmodel.AssembledModel,
    run: plant.RunRecord,
    settings: DetectorSettings | None = None,
) -> DetectorModel:
    """Gain, residual baseline and threshold from one healthy run.

    The diagonal process noise on the rotor, surge-velocity and
    pitch-velocity states is rescaled until the innovation variance of each
    output matches its predicted value.
    """
    settings = settings or DetectorSettings()
    sys = model.dt_model
    if abs(run.dt_out - sys.dt) > 1e-12:
        raise ce.ConfigurationError(f'Run sampled at {run.dt_out} s but the model works at {sys.dt} s')
    op = model.op
    u_op = op.u_op if op is not None else np.zeros(sys.m)
    y_op = op.y_op if op is not None else np.zeros(sys.p)
    u, y = run.u - u_op, run.y - y_op

    window = (run.t >= settings.baseline_start - 1e-9) & (run.t <= settings.baseline_stop + 1e-9)
    if np.count_nonzero(window) < settings.min_baseline_samples:
        raise ce.ConfigurationError(
            f'Baseline window {settings.baseline_start}-{settings.baseline_stop} s holds {np.count_nonzero(window)} '
            f'samples, at least {settings.min_baseline_samples} are needed'
        )
    r_cov = np.diag(np.maximum(np.square(settings.noise), np.square(settings.r_floor)))
    levels = {'rotor': settings.q_rotor, 'surge': settings.q_surge, 'pitch': settings.q_pitch}

    for tuning_pass in range(1, settings.q_tuning_passes + 1):
        q_cov = _process_noise(sys, levels, settings.q_other)
        p_cov, l_gain = solve_dare_gain(sys, q_cov, r_cov, settings.dare_tol, settings.dare_max_iter)
        z = residual_series(sys, l_gain, u, y)
        empirical = np.var(z[window], axis=0)
        predicted = np.diag(sys.c @ p_cov @ sys.c.T + r_cov)
        ratios = empirical / predicted
        logger.debug(f'Q tuning pass {tuning_pass}: innovation variance ratios {np.round(ratios, 3)}')
        if np.all(np.abs(ratios - 1.0) <= settings.q_tuning_tolerance):
            break
        for name, (_, channel) in TUNED_STATES.items():
            levels[name] *= float(np.clip(ratios[channel], 0.01, 100.0))
    else:
        logger.warning(f'Innovation variance still off by up to {np.max(np.abs(ratios - 1.0)):.0%} '
                       f'after {settings.q_tuning_passes} tuning passes')

    baseline = baseline_statistics(z[window], min_samples=settings.min_baseline_samples)
    threshold, bound = chebyshev_threshold(baseline.mean_d, baseline.std_d, settings.alpha)
    det = DetectorModel(
        sys=sys, l_gain=l_gain, q_cov=q_cov, r_cov=r_cov, z_bar=baseline.z_bar, sigma=baseline.sigma,
        mean_d=baseline.mean_d, std_d=baseline.std_d, alpha=settings.alpha, d_threshold=threshold,
        u_op=u_op, y_op=y_op,
    )
    radius = det.closed_loop_radius()
    if radius >= 1.0:
        raise ce.NumericalError(f'Observer closed loop is unstable (spectral radius {radius:.6f})')
    logger.info(f'Detector calibrated: mean_d {baseline.mean_d:.3f}, std_d {baseline.std_d:.3f}, '
                f'threshold {threshold:.3f} (false-alarm bound {bound:.4f}), observer radius {radius:.4f}')
    return det


def detector_from_parts(
    sys: ss.StateSpaceModel,
    l_gain: np.ndarray,
    baseline: BaselineStatistics,
    alpha: float,
    q_cov: np.ndarray | None = None,
    r_cov: np.ndarray | None = None,
    u_op: np.ndarray | None = None,
    y_op: np.ndarray | None = None,
) -> DetectorModel:
    """Rebuild a detector from stored pieces, e.g. a calibration file"""
    threshold, _ = chebyshev_threshold(baseline.mean_d, baseline.std_d, alpha)
    return DetectorModel(
        sys=sys, l_gain=np.atleast_2d(l_gain),
        q_cov=np.zeros((sys.n, sys.n)) if q_cov is None else q_cov,
        r_cov=np.eye(sys.p) if r_cov is None else r_cov,
        z_bar=baseline.z_bar, sigma=baseline.sigma, mean_d=baseline.mean_d, std_d=baseline.std_d,
        alpha=alpha, d_threshold=threshold,
        u_op=np.zeros(sys.m) if u_op is None else u_op, y_op=np.zeros(sys.p) if y_op is None else y_op,
    )
