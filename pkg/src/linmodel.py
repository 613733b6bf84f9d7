"""Wave-excited linear model of the floating turbine about its operating point."""
import logging
import math
import typing as t
from dataclasses import dataclass, field

import numpy as np

import custom_errors as ce
import hydro
import mooring
import plant
import state_space as ss

logger = logging.getLogger(__name__)

ROTOR, VELOCITY, POSITION = 0, slice(1, 7), slice(7, 13)
OUTPUT_STATES = (0, 7, 11)


@dataclass(frozen=True)
class AeroGradients:
    dq_domega: float
    dq_dtheta: float
    dq_dv: float
    dt_domega: float
    dt_dtheta: float
    dt_dv: float


@dataclass(frozen=True)
class OperatingPoint:
    v_wind: float
    xi_eq: np.ndarray
    omega_eq: float
    pitch_eq: float
    q_g_eq: float
    gradients: AeroGradients | None = None
    flags: tuple[str, ...] = field(default=())

    @classmethod
    def from_equilibrium(cls, v_wind: float, equilibrium: plant.Equilibrium) -> 'OperatingPoint':
        return cls(v_wind=v_wind, xi_eq=equilibrium.xi, omega_eq=equilibrium.omega,
                   pitch_eq=equilibrium.pitch, q_g_eq=equilibrium.q_g)

    @property
    def y_op(self) -> np.ndarray:
        return np.array([self.omega_eq, self.xi_eq[0], self.xi_eq[4]])

    @property
    def u_op(self) -> np.ndarray:
        return np.array([self.pitch_eq, self.v_wind, self.q_g_eq, 0.0])


@dataclass(frozen=True)
class AssembledModel:
    ct: ss.StateSpaceModel
    dt_model: ss.StateSpaceModel
    c_out: np.ndarray
    block_map: dict[str, tuple[int, int]]
    op: OperatingPoint | None = None

    def block_map_text(self) -> str:
        return ''.join(f'{name} {start} {stop}\n' for name, (start, stop) in self.block_map.items())


def linearize_aero(params: plant.PlantParams, op: OperatingPoint, rel_step: float = 1e-4) -> AeroGradients:
    """Central differences of the rotor loads in rotor speed, blade pitch and relative wind"""
    omega, pitch, v = op.omega_eq, op.pitch_eq, op.v_wind
    steps = (rel_step * abs(omega), rel_step * max(abs(pitch), 0.01), rel_step * abs(v))
    if min(steps) <= 0:
        raise ce.ConfigurationError('Aero linearisation needs a spinning rotor in non-zero wind')

    def loads(d_omega: float = 0.0, d_pitch: float = 0.0, d_v: float = 0.0) -> np.ndarray:
        result = plant.aero_loads(v + d_v, omega + d_omega, pitch + d_pitch, params)
        return np.array([result.q_aero, result.thrust])

    d_omega = (loads(d_omega=steps[0]) - loads(d_omega=-steps[0])) / (2.0 * steps[0])
    d_pitch = (loads(d_pitch=steps[1]) - loads(d_pitch=-steps[1])) / (2.0 * steps[1])
    d_v = (loads(d_v=steps[2]) - loads(d_v=-steps[2])) / (2.0 * steps[2])
    gradients = AeroGradients(
        dq_domega=float(d_omega[0]), dq_dtheta=float(d_pitch[0]), dq_dv=float(d_v[0]),
        dt_domega=float(d_omega[1]), dt_dtheta=float(d_pitch[1]), dt_dv=float(d_v[1]),
    )
    if gradients.dq_dtheta >= 0.0:
        logger.warning(f'Aerodynamic torque does not drop with pitch (dQ/dtheta = {gradients.dq_dtheta:.3g}), '
                       'the operating point is not above rated')
    return gradients


def aero_pose_stiffness(params: plant.PlantParams, op: OperatingPoint, thrust: float, step: float = 1e-6) -> np.ndarray:
    """Stiffness of the hub thrust load from the platform rotation at constant thrust"""
    stiffness = np.zeros((6, 6))
    for dof in range(3, 6):
        offset = np.zeros(6)
        offset[dof] = step
        forward = plant._hub_load(op.xi_eq + offset, thrust, params.rotor.hub_height)
        backward = plant._hub_load(op.xi_eq - offset, thrust, params.rotor.hub_height)
        stiffness[:, dof] = -(forward - backward) / (2.0 * step)
    return stiffness


def discretize_zoh(ct: ss.StateSpaceModel, dt: float) -> ss.StateSpaceModel:
    return ct.discretize(dt)


def _dof_selector(channels: int, labels: t.Sequence[str], suffix: str) -> np.ndarray:
    """Rows select the DOFs named by `labels` (e.g. 'surge_velocity') out of the six"""
    if not labels:
        if channels == 6:
            return np.eye(6)
        raise ce.ValidationError('Identified models need channel labels to be placed in the linear model')
    names = [label.removesuffix(suffix) for label in labels]
    selector = np.zeros((len(names), 6))
    for row, name in enumerate(names):
        if name not in hydro.DOF_NAMES:
            raise ce.ValidationError(f'Channel "{name}" is not a platform degree of freedom')
        selector[row, hydro.DOF_NAMES.index(name)] = 1.0
    return selector


def _mechanical_model(
    op: OperatingPoint,
    gradients: AeroGradients,
    stiffness: np.ndarray,
    params: plant.PlantParams,
) -> ss.StateSpaceModel:
    rotor = params.rotor
    mass = np.zeros((7, 7))
    mass[:6, :6] = params.platform_mass_matrix
    mass[6, 6] = params.m_rb[6, 6]
    try:
        mass_inverse = np.linalg.inv(mass)
    except np.linalg.LinAlgError as error:
        raise ce.ConfigurationError('Generalised mass matrix is singular') from error
    if not np.all(np.isfinite(mass_inverse)):
        raise ce.ConfigurationError('Generalised mass matrix is singular')

    hub = plant._hub_load(op.xi_eq, 1.0, rotor.hub_height)
    wind_from_velocity = np.zeros(6)
    wind_from_velocity[0] = -1.0
    wind_from_velocity[4] = -rotor.hub_height * math.cos(op.xi_eq[4])

    # Generalised forces [platform(6), rotor torque] as a function of the mechanical states
    force_map = np.zeros((7, 13))
    force_map[:6, ROTOR] = hub * gradients.dt_domega
    force_map[:6, VELOCITY] = -params.b_viscous + np.outer(hub * gradients.dt_dv, wind_from_velocity)
    force_map[:6, POSITION] = -stiffness
    force_map[6, ROTOR] = gradients.dq_domega
    force_map[6, VELOCITY] = gradients.dq_dv * wind_from_velocity

    # Inputs [theta, v, q_g, F(6)]
    input_map = np.zeros((7, 9))
    input_map[:6, 0] = hub * gradients.dt_dtheta
    input_map[:6, 1] = hub * gradients.dt_dv
    input_map[6, 0] = gradients.dq_dtheta
    input_map[6, 1] = gradients.dq_dv
    input_map[6, 2] = -rotor.tau
    input_map[:6, 3:] = np.eye(6)

    acceleration = mass_inverse @ force_map
    forcing = mass_inverse @ input_map
    a = np.zeros((13, 13))
    b = np.zeros((13, 9))
    a[ROTOR] = acceleration[6]
    a[VELOCITY] = acceleration[:6]
    a[POSITION, VELOCITY] = np.eye(6)
    b[ROTOR] = forcing[6]
    b[VELOCITY] = forcing[:6]
    c = np.zeros((3, 13))
    c[range(3), OUTPUT_STATES] = 1.0
    return ss.StateSpaceModel(
        a=a, b=b, c=c, d=np.zeros((3, 9)),
        input_labels=('theta', 'v', 'qg') + tuple(f'{dof}_force' for dof in hydro.DOF_NAMES),
        output_labels=plant.OUTPUT_NAMES,
    )


def assemble_linear_model(
    op: OperatingPoint,
    gradients: AeroGradients,
    k_moor: np.ndarray,
    k_hydro: np.ndarray,
    rad_model: ss.StateSpaceModel | None,
    wave_model: ss.StateSpaceModel | None,
    params: plant.PlantParams,
    dt: float = 0.1,
    k_aero: np.ndarray | None = None,
) -> AssembledModel:
    """Discrete linear model with states [rotor, velocities, positions, radiation, wave force].

    The mechanical part is discretised with ZOH and composed in discrete
    time with the identified radiation (driven by the platform velocities)
    and wave-force (driven by the elevation) models.
    """
    stiffness = k_hydro + k_moor + (np.zeros((6, 6)) if k_aero is None else k_aero)
    ct = _mechanical_model(op, gradients, stiffness, params)
    mechanical = discretize_zoh(ct, dt)
    bd_u, bd_f = mechanical.b[:, :3], mechanical.b[:, 3:]
    velocity = np.zeros((6, 13))
    velocity[:, VELOCITY] = np.eye(6)

    blocks = [(mechanical.a.shape[0], 'mechanical')]
    n_r = n_w = 0
    if rad_model is not None:
        if not rad_model.is_discrete or abs(rad_model.dt - dt) > 1e-12:
            raise ce.ValidationError(f'Radiation model must be discrete at {dt} s')
        s_r = _dof_selector(rad_model.m, rad_model.input_labels, '_velocity')
        n_r = rad_model.n
    if wave_model is not None:
        if not wave_model.is_discrete or abs(wave_model.dt - dt) > 1e-12:
            raise ce.ValidationError(f'Wave-force model must be discrete at {dt} s')
        if np.any(wave_model.d != 0.0):
            raise ce.ValidationError('Wave-force model must be strictly proper, the elevation enters through its states')
        s_w = _dof_selector(wave_model.p, wave_model.output_labels, '_wave')
        n_w = wave_model.n

    n = 13 + n_r + n_w
    a = np.zeros((n, n))
    b = np.zeros((n, 4))
    rad, wave = slice(13, 13 + n_r), slice(13 + n_r, n)
    a[:13, :13] = mechanical.a
    b[:13, :3] = bd_u
    if rad_model is not None:
        a[:13, :13] -= bd_f @ s_r.T @ rad_model.d @ s_r @ velocity
        a[:13, rad] = -bd_f @ s_r.T @ rad_model.c
        a[rad, :13] = rad_model.b @ s_r @ velocity
        a[rad, rad] = rad_model.a
    if wave_model is not None:
        a[:13, wave] = bd_f @ s_w.T @ wave_model.c
        a[wave, wave] = wave_model.a
        b[wave, 3] = wave_model.b[:, 0]

    c_out = np.zeros((3, n))
    c_out[range(3), OUTPUT_STATES] = 1.0
    dt_model = ss.StateSpaceModel(a=a, b=b, c=c_out, d=np.zeros((3, 4)), dt=dt,
                                  input_labels=plant.INPUT_NAMES, output_labels=plant.OUTPUT_NAMES)
    block_map = {'rotor': (0, 1), 'velocity': (1, 7), 'position': (7, 13)}
    if n_r:
        block_map['radiation'] = (13, 13 + n_r)
    if n_w:
        block_map['wave_force'] = (13 + n_r, n)
    if not dt_model.is_stable():
        logger.warning(f'Assembled linear model is not stable (spectral radius {dt_model.spectral_radius():.6f})')
    logger.info(f'Assembled linear model with {n} states ({n_r} radiation, {n_w} wave-force)')
    return AssembledModel(ct=ct, dt_model=dt_model, c_out=c_out, block_map=block_map, op=op)


def build_operating_model(
    params: plant.PlantParams,
    v_wind: float,
    rad_model: ss.StateSpaceModel | None,
    wave_model: ss.StateSpaceModel | None,
    dt: float = 0.1,
    equilibrium: plant.Equilibrium | None = None,
    stiffness_delta: float = 1e-3,
) -> AssembledModel:
    """Equilibrium, aero gradients, mooring stiffness and assembly in one call"""
    equilibrium = equilibrium or plant.find_equilibrium(v_wind, params)
    op = OperatingPoint.from_equilibrium(v_wind, equilibrium)
    gradients = linearize_aero(params, op)
    flags = ('pitch_sign',) if gradients.dq_dtheta >= 0.0 else ()
    op = OperatingPoint(v_wind=v_wind, xi_eq=op.xi_eq, omega_eq=op.omega_eq, pitch_eq=op.pitch_eq,
                        q_g_eq=op.q_g_eq, gradients=gradients, flags=flags)
    states = [mooring.LineState.healthy(line) for line in params.lines]
    k_moor = mooring.linearize_mooring_stiffness(params.lines, states, op.xi_eq, stiffness_delta)
    thrust = plant.aero_loads(v_wind, op.omega_eq, op.pitch_eq, params).thrust
    k_aero = aero_pose_stiffness(params, op, thrust)
    return assemble_linear_model(op, gradients, k_moor, params.k_hydrostatic, rad_model, wave_model, params, dt, k_aero)


def simulate_linear_model(model: AssembledModel, u: np.ndarray, x0: np.ndarray | None = None) -> np.ndarray:
    """Outputs of the discrete model for deviation inputs u (N x 4)"""
    return model.dt_model.simulate(u, x0)


def normalized_rmse(truth: np.ndarray, model: np.ndarray) -> np.ndarray:
    """Per-channel RMS error divided by the standard deviation of the truth"""
    truth, model = np.atleast_2d(truth), np.atleast_2d(model)
    error = np.sqrt(np.mean((model - truth) ** 2, axis=0))
    spread = np.std(truth, axis=0)
    return np.divide(error, spread, out=np.full_like(error, np.inf), where=spread > 0)


def surge_mode_period(model: AssembledModel) -> float:
    """Period of the oscillatory mode with the largest surge share among the position states"""
    eigenvalues, vectors = np.linalg.eig(model.dt_model.a)
    best, period = -1.0, math.nan
    for value, vector in zip(eigenvalues, vectors.T):
        s = np.log(complex(value)) / model.dt_model.dt
        if s.imag <= 0:
            continue
        positions = np.abs(vector[POSITION])
        share = positions[0] / (np.linalg.norm(positions) or 1.0)
        if share > best:
            best, period = share, 2.0 * math.pi / s.imag
    if math.isnan(period):
        raise ce.NumericalError('Linear model has no oscillatory surge mode')
    return period
