"""Identification of the radiation and wave-excitation force models.

Frequency-domain coefficients are turned into time-domain kernels, realised
with the eigensystem realisation algorithm and refined by prediction-error
minimisation.
"""
import logging
import typing as t
from dataclasses import dataclass, field, replace

import numpy as np

import custom_errors as ce
import hydro
import state_space as ss

logger = logging.getLogger(__name__)

CAUSALITY_LIMIT = 0.05
RANK_TOLERANCE = 1e-10
STABLE_RADIUS = 0.999
MAX_HANKEL_BLOCKS = 100


@dataclass(frozen=True)
class ImpulseResponse:
    """Discrete Markov parameters of a kernel sampled every `dt` seconds.

    `h[k]` belongs to time `t0 + k*dt` and already carries the quadrature
    weight, so the sequence can be used directly as the Markov parameters of
    a discrete model.
    """
    dt: float
    h: np.ndarray
    t0: float = 0.0
    t_shift: float = 0.0

    def __post_init__(self) -> None:
        h = np.asarray(self.h, dtype=float)
        if h.ndim == 1:
            h = h[:, None, None]
        if h.ndim != 3 or h.shape[0] < 2:
            raise ce.ValidationError(f'Impulse response needs at least 2 samples of p x m matrices, got {h.shape}')
        if not np.all(np.isfinite(h)):
            raise ce.ValidationError('Impulse response contains non-finite values')
        object.__setattr__(self, 'h', h)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.h.shape[0]) * self.dt

    def shifted(self, t_d: float) -> 'ImpulseResponse':
        """h'(t) = h(t - t_d), any sign"""
        return replace(self, t0=self.t0 + t_d, t_shift=self.t_shift + t_d)

    def pre_zero_ratio(self) -> float:
        """Peak magnitude before t = 0 relative to the overall peak"""
        peak = float(np.max(np.abs(self.h)))
        before = self.h[self.times < -0.5 * self.dt]
        if peak == 0.0 or not before.size:
            return 0.0
        return float(np.max(np.abs(before))) / peak

    def causal(self) -> np.ndarray:
        """Samples at t = 0, dt, 2dt, ... (zero padded when the kernel starts later)"""
        start = int(round(self.t0 / self.dt))
        if start >= 0:
            padding = np.zeros((start,) + self.h.shape[1:])
            return np.concatenate([padding, self.h])
        return self.h[-start:]


@dataclass(frozen=True)
class IOData:
    u: np.ndarray
    y: np.ndarray
    dt: float


@dataclass(frozen=True)
class FitReport:
    order: int
    hinf_band: tuple[float, ...]
    h2_band: float
    stable: bool
    flags: tuple[str, ...] = field(default=())
    cost: float = 0.0
    initial_cost: float = 0.0
    iterations: int = 0

    def as_text(self) -> str:
        lines = [
            f'order={self.order}',
            'hinf_band=' + ';'.join(f'{error:.6g}' for error in self.hinf_band),
            f'h2_band={self.h2_band:.6g}',
            f'stable={self.stable}',
            f'flags={";".join(self.flags)}',
            f'cost={self.cost:.6g}',
            f'initial_cost={self.initial_cost:.6g}',
            f'iterations={self.iterations}',
        ]
        return '\n'.join(lines) + '\n'


def dof_indices(dofs: t.Sequence[str | int]) -> list[int]:
    indices = []
    for dof in dofs:
        if isinstance(dof, str):
            if dof not in hydro.DOF_NAMES:
                raise ce.ConfigurationError(f'Unknown degree of freedom "{dof}"')
            indices.append(hydro.DOF_NAMES.index(dof))
        else:
            indices.append(int(dof))
    return indices


def band_errors(fitted: np.ndarray, reference: np.ndarray) -> tuple[tuple[float, ...], float]:
    """Relative H-infinity error per output channel and relative H2 error over the band samples"""
    difference = np.abs(fitted - reference)
    hinf = []
    for channel in range(reference.shape[1]):
        peak = float(np.max(np.abs(reference[:, channel])))
        worst = float(np.max(difference[:, channel]))
        hinf.append(worst / peak if peak > 0 else worst)
    total = float(np.sum(np.abs(reference) ** 2))
    h2 = float(np.sqrt(np.sum(difference ** 2) / total)) if total > 0 else float(np.sqrt(np.sum(difference ** 2)))
    return tuple(hinf), h2


def ogilvie_frf(frd: hydro.HydroFrd) -> np.ndarray:
    frd.validate()
    return frd.radiation_frf()


def model_frf(model: ss.StateSpaceModel, omega_grid: t.Sequence[float] | np.ndarray) -> np.ndarray:
    return model.frf(omega_grid)


def _trapezoid_weights(omega: np.ndarray) -> np.ndarray:
    step = np.diff(omega)
    weights = np.zeros_like(omega)
    weights[:-1] += step / 2
    weights[1:] += step / 2
    return weights


def impulse_response_from_frd(
    frf: np.ndarray,
    omega: np.ndarray,
    dt: float,
    duration: float = 60.0,
    kind: str = 'radiation',
    lead: float = 0.0,
) -> ImpulseResponse:
    """Kernel sampled every dt from FRF samples on a uniform grid.

    radiation: k(t) = (2/pi) int Re K(w) cos(w t) dw, t >= 0, D = dt*k(0)/2
    wave: x(t) = (1/pi) Re int X(w) e^{j w t} dw, t >= -lead (Hermitian extension)
    Both integrals are trapezoids on the grid extended to w = 0 with the first value.
    """
    omega = np.asarray(omega, dtype=float)
    frf = np.asarray(frf, dtype=complex)
    if frf.ndim == 2:
        frf = frf[:, :, None]
    spacing = np.diff(omega)
    if not np.allclose(spacing, spacing[0], rtol=1e-6, atol=0.0):
        raise ce.ConfigurationError('Frequency grid must be uniform for the kernel synthesis')
    if np.pi / dt < omega[-1]:
        raise ce.ConfigurationError(
            f'Sample step {dt} s cannot represent the grid up to {omega[-1]} rad/s (Nyquist {np.pi / dt:.4g} rad/s)'
        )
    lead_samples = int(round(lead / dt))
    times = (np.arange(int(round(duration / dt)) + 1 + lead_samples) - lead_samples) * dt
    extended_omega = np.concatenate([[0.0], omega])
    weights = _trapezoid_weights(extended_omega)
    p, m = frf.shape[1:]
    if kind == 'radiation':
        extended = np.concatenate([frf[:1].real, frf.real]).reshape(omega.size + 1, p * m)
        kernel = (2.0 / np.pi) * np.cos(np.outer(times, extended_omega)) @ (weights[:, None] * extended)
    elif kind == 'wave':
        extended = np.concatenate([frf[:1].real.astype(complex), frf]).reshape(omega.size + 1, p * m)
        kernel = (1.0 / np.pi) * np.real(np.exp(1j * np.outer(times, extended_omega)) @ (weights[:, None] * extended))
    else:
        raise ce.ConfigurationError(f'Unknown kernel kind "{kind}"')
    markov = dt * kernel.reshape(times.size, p, m)
    if kind == 'radiation':
        markov[0] *= 0.5
    return ImpulseResponse(dt=dt, h=markov, t0=float(times[0]))


def causalize(h: ImpulseResponse, t_d: float) -> ImpulseResponse:
    if t_d < 0:
        raise ce.ConfigurationError(f'Causalisation shift must be non-negative, got {t_d}')
    steps = t_d / h.dt
    if abs(steps - round(steps)) > 1e-9:
        raise ce.ConfigurationError(f'Causalisation shift {t_d} s is not a multiple of the sample step {h.dt} s')
    shifted = h.shifted(round(steps) * h.dt)
    ratio = shifted.pre_zero_ratio()
    if ratio >= CAUSALITY_LIMIT:
        logger.warning(f'Kernel keeps {ratio:.1%} of its peak before t = 0 after a {t_d} s shift')
    return shifted


def scan_causalization_shift(h: ImpulseResponse, candidates: t.Iterable[float]) -> tuple[dict[float, float], float | None]:
    """Pre-zero peak ratio per candidate shift, plus the smallest shift under the causality limit"""
    ratios = {float(t_d): h.shifted(t_d).pre_zero_ratio() for t_d in candidates}
    passing = [t_d for t_d, ratio in sorted(ratios.items()) if ratio < CAUSALITY_LIMIT]
    return ratios, (passing[0] if passing else None)


def _stabilize(a: np.ndarray) -> tuple[np.ndarray, bool]:
    """Move eigenvalues on or outside the unit circle to 1/|z| (at most STABLE_RADIUS), same angle"""
    eigenvalues, vectors = np.linalg.eig(a)
    radius = np.abs(eigenvalues)
    unstable = radius >= 1.0
    if not np.any(unstable):
        return a, False
    target = np.minimum(1.0 / radius[unstable], STABLE_RADIUS)
    eigenvalues = eigenvalues.copy()
    eigenvalues[unstable] *= target / radius[unstable]
    stabilized = (vectors @ np.diag(eigenvalues) @ np.linalg.inv(vectors)).real
    return stabilized, True


def _markov_frf(markov: np.ndarray, dt: float, omega: np.ndarray) -> np.ndarray:
    phases = np.exp(-1j * np.outer(omega, np.arange(markov.shape[0])) * dt)
    return np.tensordot(phases, markov, axes=(1, 0))


def fit_state_space_era(
    h: ImpulseResponse,
    order: int,
    band: tuple[float, float] = (0.3, 1.8),
) -> tuple[ss.StateSpaceModel, FitReport]:
    """Eigensystem realisation from the block-Hankel matrix of the causal Markov parameters"""
    if order < 1:
        raise ce.ConfigurationError(f'Model order must be >= 1, got {order}')
    markov = h.causal()
    count, p, m = markov.shape
    blocks = min((count - 1) // 2, MAX_HANKEL_BLOCKS)
    if blocks < 2 * order:
        raise ce.ConfigurationError(f'{count} samples cannot fill a Hankel matrix for order {order}')

    # H0[i, j] = Y(i + j + 1), H1[i, j] = Y(i + j + 2)
    hankel_0 = np.block([[markov[i + j + 1] for j in range(blocks)] for i in range(blocks)])
    hankel_1 = np.block([[markov[i + j + 2] for j in range(blocks)] for i in range(blocks)])
    u, sigma, vt = np.linalg.svd(hankel_0, full_matrices=False)

    flags = []
    if sigma[0] == 0.0:
        logger.info('Impulse response is identically zero, returning a zero model')
        model = ss.StateSpaceModel.zero(p, m, dt=h.dt)
        return model, FitReport(order=1, hinf_band=(0.0,) * p, h2_band=0.0, stable=True, flags=('zero_model',))
    rank = int(np.sum(sigma > RANK_TOLERANCE * sigma[0]))
    if rank < order:
        logger.warning(f'Hankel matrix has effective rank {rank}, reducing the order from {order}')
        flags.append('order_reduced')
        order = rank

    root = np.sqrt(sigma[:order])
    observability = u[:, :order] * root
    controllability = root[:, None] * vt[:order]
    a = (u[:, :order] / root).T @ hankel_1 @ (vt[:order].T / root)
    b = controllability[:, :m]
    c = observability[:p]
    a, reflected = _stabilize(a)
    if reflected:
        logger.warning('Realisation had unstable modes, reflected them inside the unit circle')
        flags.append('reflected')

    model = ss.StateSpaceModel(a=a, b=b, c=c, d=markov[0], dt=h.dt)
    omega = np.linspace(band[0], band[1], 64)
    hinf, h2 = band_errors(model.frf(omega), _markov_frf(markov, h.dt, omega))
    report = FitReport(order=order, hinf_band=hinf, h2_band=h2, stable=model.is_stable(), flags=tuple(flags))
    logger.debug(f'ERA fit of order {order}: band errors {", ".join(f"{e:.3g}" for e in hinf)}')
    return model, report


def _pack(model: ss.StateSpaceModel) -> np.ndarray:
    return np.concatenate([model.a.ravel(), model.b.ravel(), model.c.ravel()])


def _unpack(theta: np.ndarray, template: ss.StateSpaceModel) -> ss.StateSpaceModel:
    n, m, p = template.n, template.m, template.p
    a = theta[:n * n].reshape(n, n)
    b = theta[n * n:n * n + n * m].reshape(n, m)
    c = theta[n * n + n * m:].reshape(p, n)
    return ss.StateSpaceModel(a=a, b=b, c=c, d=template.d, dt=template.dt,
                              input_labels=template.input_labels, output_labels=template.output_labels)


def _residual_function(data: ImpulseResponse | IOData, template: ss.StateSpaceModel) -> tuple[t.Callable, float]:
    if isinstance(data, ImpulseResponse):
        target = data.causal()
        scale = float(np.sum(target[1:] ** 2))

        def residual(model: ss.StateSpaceModel) -> np.ndarray:
            return (model.markov_parameters(target.shape[0])[1:] - target[1:]).ravel()
    else:
        u = np.asarray(data.u, dtype=float).reshape(-1, template.m)
        y = np.asarray(data.y, dtype=float).reshape(-1, template.p)
        scale = float(np.sum(y ** 2))

        def residual(model: ss.StateSpaceModel) -> np.ndarray:
            return (model.simulate(u) - y).ravel()
    return residual, scale


def pem_refine(
    init: ss.StateSpaceModel,
    data: ImpulseResponse | IOData,
    max_iter: int = 30,
    tol: float = 1e-9,
) -> tuple[ss.StateSpaceModel, FitReport]:
    """Output-error refinement of (A, B, C) by Levenberg-damped Gauss-Newton.

    D is kept. Candidate steps that are unstable or do not lower the cost are
    rejected with a larger damping, so the returned model is never worse than
    `init`.
    """
    if not init.is_discrete or not init.is_stable():
        raise ce.ValidationError('Prediction-error refinement needs a stable discrete initial model')
    if data.dt != init.dt:
        raise ce.ConfigurationError(f'Data sample step {data.dt} s differs from the model step {init.dt} s')
    residual, scale = _residual_function(data, init)

    def report(model: ss.StateSpaceModel, cost: float, initial: float, iterations: int, flags: list[str]) -> FitReport:
        return FitReport(order=model.n, hinf_band=(), h2_band=float(np.sqrt(cost)), stable=model.is_stable(),
                         flags=tuple(flags), cost=cost, initial_cost=initial, iterations=iterations)

    if scale == 0.0:
        return init, report(init, 0.0, 0.0, 0, ['zero_data'])

    theta = _pack(init)
    r = residual(init)
    cost = float(r @ r) / scale
    initial_cost = cost
    damping = 1e-3
    flags: list[str] = []
    iterations = 0
    typical = np.sqrt(np.mean(theta ** 2)) or 1.0

    while iterations < max_iter and cost > 0.0:
        iterations += 1
        steps = np.sqrt(np.finfo(float).eps) * np.maximum(np.abs(theta), 1e-3 * typical)
        jacobian = np.empty((r.size, theta.size))
        for index, step in enumerate(steps):
            perturbed = theta.copy()
            perturbed[index] += step
            jacobian[:, index] = (residual(_unpack(perturbed, init)) - r) / step
        gradient = jacobian.T @ r
        normal = jacobian.T @ jacobian
        diagonal = np.maximum(np.diag(normal), 1e-12 * np.max(np.diag(normal)) + 1e-300)

        accepted = False
        while damping < 1e12:
            try:
                step = np.linalg.solve(normal + damping * np.diag(diagonal), -gradient)
            except np.linalg.LinAlgError:
                damping *= 10.0
                continue
            candidate = _unpack(theta + step, init)
            if candidate.is_stable():
                candidate_r = residual(candidate)
                candidate_cost = float(candidate_r @ candidate_r) / scale
                if candidate_cost < cost:
                    accepted = True
                    break
            damping *= 10.0
        if not accepted:
            logger.debug(f'No descent step left after {iterations} iterations')
            break
        decrease = cost - candidate_cost
        theta, r, cost = theta + step, candidate_r, candidate_cost
        damping = max(damping / 3.0, 1e-12)
        if decrease <= tol * (cost + decrease):
            break
    else:
        if cost > 0.0 and iterations >= max_iter and max_iter > 0:
            flags.append('not_converged')

    refined = _unpack(theta, init) if iterations else init
    logger.info(f'Prediction-error refinement: cost {initial_cost:.3e} -> {cost:.3e} in {iterations} iterations')
    return refined, report(refined, cost, initial_cost, iterations, flags)


def _band_mask(omega: np.ndarray, band: tuple[float, float]) -> np.ndarray:
    return (omega >= band[0]) & (omega <= band[1])


def fit_radiation_model(
    frd: hydro.HydroFrd,
    order: int,
    dofs: t.Sequence[str | int] = ('surge', 'heave', 'pitch'),
    dt: float = 0.1,
    duration: float = 60.0,
    max_iter: int = 30,
    tol: float = 1e-9,
    band: tuple[float, float] = (0.3, 1.8),
) -> tuple[ss.StateSpaceModel, FitReport]:
    """Radiation force model on the active DOFs: input platform velocity, output radiation force"""
    indices = dof_indices(dofs)
    frf = ogilvie_frf(frd)[:, indices][:, :, indices]
    kernel = impulse_response_from_frd(frf, frd.omega, dt, duration=duration, kind='radiation')
    initial, era_report = fit_state_space_era(kernel, order, band)
    refined, pem_report = pem_refine(initial, kernel, max_iter=max_iter, tol=tol)
    names = [hydro.DOF_NAMES[index] for index in indices]
    model = refined.with_labels([f'{name}_velocity' for name in names], [f'{name}_radiation' for name in names])

    mask = _band_mask(frd.omega, band)
    hinf, h2 = band_errors(model.frf(frd.omega[mask]), frf[mask])
    report = replace(pem_report, order=model.n, hinf_band=hinf, h2_band=h2,
                     flags=era_report.flags + pem_report.flags)
    logger.info(f'Radiation model of order {model.n} on {", ".join(names)}: band errors '
                + ', '.join(f'{error:.2%}' for error in hinf))
    return model, report


def _append_differentiator(model: ss.StateSpaceModel) -> ss.StateSpaceModel:
    """y_k = (w_k - w_{k-1})/dt where w is the output of `model`"""
    n, p, dt = model.n, model.p, model.dt
    a = np.block([[model.a, np.zeros((n, p))], [model.c, np.zeros((p, p))]])
    b = np.vstack([model.b, model.d])
    c = np.hstack([model.c, -np.eye(p)]) / dt
    return ss.StateSpaceModel(a=a, b=b, c=c, d=model.d / dt, dt=dt)


def fit_wave_force_model(
    frd: hydro.HydroFrd,
    order: int,
    t_d: float,
    dofs: t.Sequence[str | int] = ('surge', 'heave', 'pitch'),
    dt: float = 0.1,
    duration: float = 60.0,
    lead: float = 10.0,
    max_iter: int = 30,
    tol: float = 1e-9,
    band: tuple[float, float] = (0.3, 1.8),
) -> tuple[ss.StateSpaceModel, FitReport]:
    """Causal wave-force model with input wave elevation, delayed by t_d seconds.

    The kernel is shifted, integrated into a step response, realised and then
    differentiated inside the state space. The model is strictly proper (D = 0).
    """
    indices = dof_indices(dofs)
    x_omega = frd.x_omega[:, indices]
    kernel = impulse_response_from_frd(x_omega, frd.omega, dt, duration=duration, kind='wave', lead=max(lead, t_d))
    shifted = causalize(kernel, t_d)
    ratio = shifted.pre_zero_ratio()
    if ratio >= CAUSALITY_LIMIT:
        raise ce.ConfigurationError(
            f'Wave-force kernel keeps {ratio:.1%} of its peak before t = 0 with t_d = {t_d} s, use a larger shift'
        )
    # Dropping the t = 0 sample keeps D = 0, so the elevation only reaches the force through the states
    causal = shifted.causal().copy()
    causal[0] = 0.0
    # Rectangle sum, the exact inverse of the first difference applied after the fit
    integrated = ImpulseResponse(dt=dt, h=dt * np.cumsum(causal, axis=0), t_shift=shifted.t_shift)
    initial, era_report = fit_state_space_era(integrated, order, band)
    refined, pem_report = pem_refine(initial, integrated, max_iter=max_iter, tol=tol)
    names = [hydro.DOF_NAMES[index] for index in indices]
    model = _append_differentiator(refined).with_labels(['wave_elevation'], [f'{name}_wave' for name in names])

    mask = _band_mask(frd.omega, band)
    reference = (x_omega[mask] * np.exp(-1j * frd.omega[mask] * t_d)[:, None])[:, :, None]
    hinf, h2 = band_errors(model.frf(frd.omega[mask]), reference)
    report = replace(pem_report, order=model.n, hinf_band=hinf, h2_band=h2,
                     flags=era_report.flags + pem_report.flags)
    logger.info(f'Wave-force model of order {model.n} (t_d = {t_d} s) on {", ".join(names)}: band errors '
                + ', '.join(f'{error:.2%}' for error in hinf))
    return model, report
