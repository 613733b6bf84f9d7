"""Wave environment and hydrodynamic coefficient data.

JONSWAP spectra, random-phase elevation series and the frequency-response
dataset (added mass, radiation damping, wave-force coefficients) consumed by
the identification.
"""
import functools
import logging
import typing as t
from dataclasses import dataclass
from pathlib import Path

import numpy as np

import custom_errors as ce
import state_space as ss

logger = logging.getLogger(__name__)

GRAVITY = 9.81
DOF_NAMES = ('surge', 'sway', 'heave', 'roll', 'pitch', 'yaw')
PSD_TOLERANCE = 1e-9


@dataclass(frozen=True)
class WaveSpec:
    hs: float
    tp: float
    gamma: float = 3.3
    omega_min: float = 0.05
    omega_max: float = 3.0
    n_omega: int = 200
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.hs > 0 and self.tp > 0):
            raise ce.ConfigurationError(f'Wave height and peak period must be positive (hs={self.hs}, tp={self.tp})')
        if self.gamma < 1:
            raise ce.ConfigurationError(f'Peak-enhancement factor must be >= 1, got {self.gamma}')
        if not 0 < self.omega_min < self.omega_max or self.n_omega < 2:
            raise ce.ConfigurationError(
                f'Invalid frequency grid: {self.omega_min} to {self.omega_max} rad/s with {self.n_omega} points'
            )

    @classmethod
    def from_config(cls, config, seed: int = 0) -> 'WaveSpec':
        wave = config.section('wave')
        return cls(
            hs=float(wave['hs']), tp=float(wave['tp']), gamma=float(wave['gamma']),
            omega_min=float(wave['omega_min']), omega_max=float(wave['omega_max']),
            n_omega=int(wave['n_omega']), seed=seed,
        )

    @property
    def omega_grid(self) -> np.ndarray:
        return np.linspace(self.omega_min, self.omega_max, self.n_omega)

    @property
    def d_omega(self) -> float:
        return (self.omega_max - self.omega_min) / (self.n_omega - 1)

    @property
    def omega_peak(self) -> float:
        return 2.0 * np.pi / self.tp

    @functools.cached_property
    def alpha(self) -> float:
        """Spectrum scale giving 4*sqrt(m0) = hs with m0 the rectangle sum on the grid"""
        m0 = float(np.sum(_jonswap_shape(self, self.omega_grid)) * self.d_omega)
        return (self.hs / 4.0) ** 2 / m0


@dataclass(frozen=True)
class WaveRealization:
    dt: float
    eta: np.ndarray
    seed: int

    @property
    def t(self) -> np.ndarray:
        return np.arange(self.eta.size) * self.dt

    @property
    def duration(self) -> float:
        return (self.eta.size - 1) * self.dt


@dataclass(frozen=True)
class HydroFrd:
    omega: np.ndarray
    a_inf: np.ndarray
    a_omega: np.ndarray
    b_omega: np.ndarray
    x_omega: np.ndarray

    def validate(self) -> None:
        n = self.omega.size
        if self.a_inf.shape != (6, 6) or self.a_omega.shape != (n, 6, 6) or self.b_omega.shape != (n, 6, 6):
            raise ce.ValidationError('Hydrodynamic matrices must be 6x6 per frequency')
        if self.x_omega.shape != (n, 6):
            raise ce.ValidationError(f'Wave-force coefficients must have shape ({n}, 6), got {self.x_omega.shape}')
        if not np.allclose(self.a_inf, self.a_inf.T, rtol=1e-9, atol=0.0):
            raise ce.ValidationError('Infinite-frequency added mass is not symmetric')
        scale = max(float(np.max(np.abs(self.b_omega))), 1.0)
        for omega, damping in zip(self.omega, self.b_omega):
            if not np.allclose(damping, damping.T, rtol=1e-9, atol=PSD_TOLERANCE * scale):
                raise ce.ValidationError(f'Radiation damping is not symmetric at omega={omega:.4g} rad/s')
            smallest = float(np.min(np.linalg.eigvalsh(0.5 * (damping + damping.T))))
            if smallest < -PSD_TOLERANCE * scale:
                raise ce.ValidationError(
                    f'Radiation damping is not positive semidefinite at omega={omega:.4g} rad/s (eigenvalue {smallest:.3g})'
                )

    def radiation_frf(self) -> np.ndarray:
        """K(omega) = B(omega) + j*omega*(A(omega) - A_inf), shape (n, 6, 6)"""
        return self.b_omega + 1j * self.omega[:, None, None] * (self.a_omega - self.a_inf)


def _jonswap_shape(spec: WaveSpec, omega: np.ndarray) -> np.ndarray:
    omega_p = spec.omega_peak
    sigma = np.where(omega <= omega_p, 0.07, 0.09)
    peak_exponent = np.exp(-((omega - omega_p) ** 2) / (2.0 * sigma ** 2 * omega_p ** 2))
    with np.errstate(over='ignore', under='ignore'):
        return GRAVITY ** 2 * omega ** -5.0 * np.exp(-1.25 * (omega_p / omega) ** 4) * spec.gamma ** peak_exponent


def jonswap_spectrum(spec: WaveSpec, omega: float | np.ndarray) -> float | np.ndarray:
    """JONSWAP spectral density [m^2 s/rad], renormalised so the grid variance gives hs"""
    omega_array = np.asarray(omega, dtype=float)
    if np.any(omega_array <= 0):
        raise ce.DomainError('Spectral density is only defined for omega > 0')
    density = spec.alpha * _jonswap_shape(spec, omega_array)
    return float(density) if np.ndim(omega) == 0 else density


def wave_variance_on_grid(spec: WaveSpec) -> float:
    return float(np.sum(jonswap_spectrum(spec, spec.omega_grid)) * spec.d_omega)


def realize_wave_elevation(spec: WaveSpec, dt: float, duration: float) -> WaveRealization:
    """Equal-energy random-phase superposition on the frequency grid of the wave spec"""
    if not dt > 0:
        raise ce.ConfigurationError(f'Wave sample step must be positive, got {dt}')
    if duration < 10.0 * spec.tp:
        raise ce.ConfigurationError(f'Wave duration {duration} s is shorter than 10 peak periods ({10 * spec.tp} s)')
    omega = spec.omega_grid
    amplitudes = np.sqrt(2.0 * jonswap_spectrum(spec, omega) * spec.d_omega)
    phases = np.random.default_rng(spec.seed).uniform(0.0, 2.0 * np.pi, omega.size)
    times = np.arange(int(np.floor(duration / dt + 1e-9)) + 1) * dt
    eta = np.empty_like(times)
    # Chunked to bound the (samples x frequencies) temporary
    for start in range(0, times.size, 4096):
        chunk = times[start:start + 4096]
        eta[start:start + 4096] = np.cos(np.outer(chunk, omega) + phases) @ amplitudes
    logger.debug(f'Realised {times.size} wave samples with seed {spec.seed}, sample std {eta.std():.4f} m')
    return WaveRealization(dt=dt, eta=eta, seed=spec.seed)


def export_wave_realization(wave: WaveRealization, path: str | Path) -> None:
    np.savetxt(path, np.column_stack([wave.t, wave.eta]), delimiter=',', header='t,eta', comments='', fmt='%.9g')
    logger.info(f'Wave realisation written to "{path}"')


def _dof_vector(entries: dict[int, float]) -> np.ndarray:
    vector = np.zeros(6)
    for index, value in entries.items():
        vector[index] = value
    return vector


def _mapped_sections(sections: t.Sequence[tuple[ss.StateSpaceModel, np.ndarray]]) -> ss.StateSpaceModel:
    """Sum of SISO sections, each driven by v.xi_dot and feeding its output back along v"""
    stacked = ss.block_diagonal([section for section, _ in sections])
    directions = np.array([vector for _, vector in sections])
    return ss.StateSpaceModel(
        a=stacked.a, b=stacked.b @ directions, c=directions.T @ stacked.c, d=directions.T @ stacked.d @ directions,
        input_labels=tuple(f'{dof}_velocity' for dof in DOF_NAMES),
        output_labels=tuple(f'{dof}_radiation' for dof in DOF_NAMES),
    )


def default_truth_radiation_model(config) -> ss.StateSpaceModel:
    """Order-12 continuous radiation model used as ground truth"""
    radiation = config.section('truth_radiation')
    z_c = float(radiation['surge_pitch_coupling_z'])

    def section(name: str) -> ss.StateSpaceModel:
        values = radiation[name]
        return ss.second_order_section(float(values['gain']), float(values['omega']), float(values['zeta']))

    return _mapped_sections([
        (section('surge'), _dof_vector({0: 1.0, 4: z_c})),
        (section('sway'), _dof_vector({1: 1.0, 3: -z_c})),
        (section('heave'), _dof_vector({2: 1.0})),
        (section('roll'), _dof_vector({3: 1.0})),
        (section('pitch'), _dof_vector({4: 1.0})),
        (section('yaw'), _dof_vector({5: 1.0})),
    ])


def _lag_chain(count: int, time_constant: float) -> ss.StateSpaceModel:
    a = np.diag(np.full(count, -1.0 / time_constant)) + np.diag(np.full(count - 1, 1.0 / time_constant), -1)
    b = np.zeros((count, 1))
    b[0, 0] = 1.0 / time_constant
    c = np.zeros((1, count))
    c[0, -1] = 1.0
    return ss.StateSpaceModel(a=a, b=b, c=c, d=[[0.0]])


def _lowpass(omega: float, zeta: float) -> ss.StateSpaceModel:
    return ss.StateSpaceModel(
        a=[[0.0, 1.0], [-omega ** 2, -2.0 * zeta * omega]], b=[[0.0], [1.0]], c=[[omega ** 2, 0.0]], d=[[0.0]],
    )


def default_truth_wave_model(config) -> ss.StateSpaceModel:
    """Order-16 causal wave-force model: elevation in, six generalised forces out"""
    wave = config.section('truth_wave')
    chain = _lag_chain(int(wave['lag_count']), float(wave['lag_time']))
    lowpass_omega, lowpass_zeta = float(wave['lowpass_omega']), float(wave['lowpass_zeta'])
    channels = []
    for dof in ('surge', 'heave', 'pitch'):
        values = wave[dof]
        omega, zeta = float(values['omega']), float(values['zeta'])
        # gain is the band-pass peak value
        bandpass = ss.second_order_section(float(values['gain']) * 2.0 * zeta * omega, omega, zeta)
        channels.append(ss.series(_lowpass(lowpass_omega, lowpass_zeta), bandpass))
    stacked = ss.block_diagonal(channels)
    fan_out = ss.StateSpaceModel(
        a=stacked.a, b=stacked.b @ np.ones((len(channels), 1)), c=stacked.c, d=stacked.d @ np.ones((len(channels), 1)),
    )
    model = ss.series(chain, fan_out)
    selector = np.zeros((6, 3))
    selector[[0, 2, 4], [0, 1, 2]] = 1.0
    return ss.StateSpaceModel(
        a=model.a, b=model.b, c=selector @ model.c, d=selector @ model.d,
        input_labels=('wave_elevation',), output_labels=tuple(f'{dof}_wave' for dof in DOF_NAMES),
    )


def generate_synthetic_hydro_dataset(
    truth_rad: ss.StateSpaceModel,
    truth_wave: ss.StateSpaceModel,
    a_inf: np.ndarray,
    omega_grid: np.ndarray,
    wave_shift: float = 0.0,
) -> HydroFrd:
    """Evaluate the truth models on the grid and store them in the dataset decomposition.

    The wave coefficients are advanced by `wave_shift` seconds, so the stored
    kernel is non-causal and the identification must remove the shift again.
    """
    for name, model in (('radiation', truth_rad), ('wave-force', truth_wave)):
        if model.is_discrete or not model.is_stable():
            raise ce.ValidationError(f'Truth {name} model must be a stable continuous model')
    omega = np.asarray(omega_grid, dtype=float)
    if np.any(omega <= 0):
        raise ce.DomainError('Dataset frequencies must be positive')
    a_inf = np.asarray(a_inf, dtype=float)
    radiation = truth_rad.frf(omega)
    b_omega = radiation.real
    a_omega = a_inf + radiation.imag / omega[:, None, None]
    x_omega = truth_wave.frf(omega)[:, :, 0] * np.exp(1j * omega * wave_shift)[:, None]
    frd = HydroFrd(omega=omega, a_inf=a_inf, a_omega=a_omega, b_omega=b_omega, x_omega=x_omega)
    frd.validate()
    logger.info(f'Synthesised hydrodynamic dataset on {omega.size} frequencies ({omega[0]:.3g} to {omega[-1]:.3g} rad/s)')
    return frd


def default_added_mass(config) -> np.ndarray:
    added_mass = config.section('added_mass')
    a_inf = np.diag(np.asarray(added_mass['diagonal'], dtype=float))
    z = float(added_mass['coupling_z'])
    a_inf[0, 4] = a_inf[4, 0] = a_inf[0, 0] * z
    a_inf[1, 3] = a_inf[3, 1] = -a_inf[1, 1] * z
    return a_inf


def _frd_header() -> str:
    columns = ['omega']
    columns += [f'a{i}{j}' for i in range(6) for j in range(6)]
    columns += [f'b{i}{j}' for i in range(6) for j in range(6)]
    columns += [f're_x{i}' for i in range(6)] + [f'im_x{i}' for i in range(6)]
    return ','.join(columns)


def save_hydro_dataset(frd: HydroFrd, directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    n = frd.omega.size
    table = np.column_stack([
        frd.omega, frd.a_omega.reshape(n, 36), frd.b_omega.reshape(n, 36), frd.x_omega.real, frd.x_omega.imag,
    ])
    np.savetxt(directory / 'frd.csv', table, delimiter=',', header=_frd_header(), comments='', fmt='%.17g')
    np.savetxt(directory / 'ainf.csv', frd.a_inf, delimiter=',', fmt='%.17g')
    logger.info(f'Hydrodynamic dataset written to "{directory}"')
    return directory


def load_hydro_dataset(directory: str | Path) -> HydroFrd:
    directory = Path(directory)
    frd_path, a_inf_path = directory / 'frd.csv', directory / 'ainf.csv'
    for path in (frd_path, a_inf_path):
        if not path.exists():
            raise ce.ConfigurationError(f'Hydrodynamic dataset file "{path}" does not exist')
    try:
        table = np.atleast_2d(np.loadtxt(frd_path, delimiter=',', skiprows=1))
        a_inf = np.loadtxt(a_inf_path, delimiter=',').reshape(6, 6)
    except ValueError as error:
        raise ce.ValidationError(f'Malformed hydrodynamic dataset in "{directory}": {error}') from error
    if table.shape[1] != 1 + 36 + 36 + 12:
        raise ce.ValidationError(f'Expected 85 columns in "{frd_path}", found {table.shape[1]}')
    n = table.shape[0]
    frd = HydroFrd(
        omega=table[:, 0],
        a_inf=a_inf,
        a_omega=table[:, 1:37].reshape(n, 6, 6),
        b_omega=table[:, 37:73].reshape(n, 6, 6),
        x_omega=table[:, 73:79] + 1j * table[:, 79:85],
    )
    frd.validate()
    logger.info(f'Loaded hydrodynamic dataset with {n} frequencies from "{directory}"')
    return frd
