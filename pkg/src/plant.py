"""Nonlinear truth simulator of the floating turbine.

Rotor speed, six rigid platform DOFs, quasi-steady aerodynamics, truth
radiation memory, catenary mooring and wave excitation, integrated with a
fixed-step RK4 under a digital collective-pitch controller.
"""
import logging
import math
import typing as t
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

import custom_errors as ce
import hydro
import mooring
import state_space as ss

logger = logging.getLogger(__name__)

OUTPUT_NAMES = ('omega_rotor', 'surge', 'pitch_platform')
INPUT_NAMES = ('theta', 'v', 'qg', 'eta')
PITCH_SANITY_BAND = 0.35
EQUILIBRIUM_MAX_ITER = 100


@dataclass(frozen=True)
class RotorParams:
    j_r: float
    j_g: float
    tau: float
    radius: float
    hub_height: float
    rated_speed: float
    rated_power: float
    rated_wind_speed: float

    @property
    def inertia(self) -> float:
        """Drivetrain inertia seen by the low-speed shaft"""
        return self.j_r + self.tau ** 2 * self.j_g

    @property
    def rated_torque(self) -> float:
        """Rated generator torque on the high-speed shaft"""
        return self.rated_power / (self.tau * self.rated_speed)


@dataclass(frozen=True)
class AeroParams:
    cp: tuple[float, float, float, float, float, float]
    cp_lambda_shift: float
    cp_theta_cubic: float
    ct_max: float
    ct_lambda: float
    ct_theta_decay: float
    feather_pitch: float
    min_relative_wind: float
    rho_air: float


@dataclass(frozen=True)
class ControllerParams:
    kp: float
    ki: float
    pitch_min: float
    pitch_max: float
    pitch_rate: float
    torque_limit_ratio: float


@dataclass(frozen=True)
class PlantParams:
    m_rb: np.ndarray
    k_hydrostatic: np.ndarray
    f_hydrostatic: np.ndarray
    a_inf: np.ndarray
    b_viscous: np.ndarray
    rotor: RotorParams
    aero: AeroParams
    controller: ControllerParams
    lines: tuple[mooring.MooringLineParams, ...]
    truth_radiation: ss.StateSpaceModel
    truth_wave: ss.StateSpaceModel
    rho_water: float = 1025.0
    gravity: float = 9.81

    @property
    def platform_mass_matrix(self) -> np.ndarray:
        """Rigid-body plus infinite-frequency added mass of the six platform DOFs"""
        return self.m_rb[:6, :6] + self.a_inf

    def validate(self) -> None:
        mass = self.m_rb
        if not np.allclose(mass, mass.T) or np.min(np.linalg.eigvalsh(mass)) <= 0:
            raise ce.ValidationError('Rigid-body inertia must be symmetric positive definite')
        block = self.k_hydrostatic[2:5, 2:5]
        if not np.allclose(block, block.T) or np.min(np.linalg.eigvalsh(block)) < 0:
            raise ce.ValidationError('Hydrostatic stiffness must be symmetric PSD on heave, roll and pitch')


@dataclass(frozen=True)
class ControllerState:
    integrator: float = 0.0
    pitch_offset: float = 0.0


@dataclass
class PlantState:
    xi: np.ndarray
    xi_dot: np.ndarray
    omega_rotor: float
    azimuth: float
    x_rad_truth: np.ndarray
    x_wave_truth: np.ndarray
    pitch_actual: float
    ctrl: ControllerState
    line_states: list[mooring.LineState]


class AeroLoads(t.NamedTuple):
    q_aero: float
    thrust: float
    clamped: bool


class Equilibrium(t.NamedTuple):
    xi: np.ndarray
    omega: float
    pitch: float
    q_g: float
    tensions: np.ndarray


@dataclass(frozen=True)
class SimulationOptions:
    dt_inner: float = 0.025
    aero: bool = True
    controller: bool = True
    damping: bool = True
    initial_offset: tuple[float, ...] | None = None


@dataclass(frozen=True)
class RunRecord:
    dt_out: float
    t: np.ndarray
    u: np.ndarray
    y: np.ndarray
    outputs_clean: np.ndarray
    tensions: np.ndarray
    fault_log: tuple[mooring.FaultEvent, ...] = field(default=())
    seed: int = 0
    wave_seed: int = 0
    final_state: PlantState | None = None


def default_plant_params(config, lines: t.Sequence[mooring.MooringLineParams] | None = None) -> PlantParams:
    """Platform, rotor and truth models from the settings.

    The platform mass is not an input: it is the value that puts the design
    pose in vertical balance with buoyancy and the mooring pretension.
    """
    turbine, platform = config.section('turbine'), config.section('platform')
    aero, controller = config.section('aero'), config.section('controller')
    lines = tuple(mooring.default_mooring_lines(config) if lines is None else lines)

    rho, gravity = float(platform['rho_water']), float(platform['gravity'])
    displacement = float(platform['displacement'])
    design_states = [mooring.LineState.healthy(line) for line in lines]
    pretension = mooring.mooring_force(np.zeros(6), lines, design_states)
    mass = (rho * gravity * displacement + pretension[2]) / gravity
    z_g, z_b = float(platform['center_of_gravity_z']), float(platform['center_of_buoyancy_z'])

    radius = float(platform['column_diameter']) / 2.0
    offset = float(platform['column_offset'])
    angles = np.radians(np.asarray(platform['column_angles_deg'], dtype=float))
    column_area = math.pi * radius ** 2
    waterplane = column_area * angles.size
    own_inertia = math.pi * radius ** 4 / 4.0
    i_xx = float(np.sum(own_inertia + column_area * (offset * np.sin(angles)) ** 2))
    i_yy = float(np.sum(own_inertia + column_area * (offset * np.cos(angles)) ** 2))

    k_hydrostatic = np.zeros((6, 6))
    k_hydrostatic[2, 2] = rho * gravity * waterplane
    k_hydrostatic[3, 3] = rho * gravity * (i_xx + displacement * z_b) - mass * gravity * z_g
    k_hydrostatic[4, 4] = rho * gravity * (i_yy + displacement * z_b) - mass * gravity * z_g
    f_hydrostatic = np.zeros(6)
    f_hydrostatic[2] = rho * gravity * displacement - mass * gravity

    k_roll_pitch = float(platform['radius_of_gyration_roll_pitch'])
    k_yaw = float(platform['radius_of_gyration_yaw'])
    m_rb = np.zeros((7, 7))
    m_rb[:3, :3] = mass * np.eye(3)
    m_rb[3, 3] = m_rb[4, 4] = mass * (k_roll_pitch ** 2 + z_g ** 2)
    m_rb[5, 5] = mass * k_yaw ** 2
    m_rb[0, 4] = m_rb[4, 0] = mass * z_g
    m_rb[1, 3] = m_rb[3, 1] = -mass * z_g

    tau = float(turbine['gearbox_ratio'])
    rotor = RotorParams(
        j_r=float(turbine['j_rotor']), j_g=float(turbine['j_generator']), tau=tau,
        radius=float(turbine['rotor_radius']), hub_height=float(turbine['hub_height']),
        rated_speed=float(turbine['rated_rotor_speed_rpm']) * 2.0 * math.pi / 60.0,
        rated_power=float(turbine['rated_power']), rated_wind_speed=float(turbine['rated_wind_speed']),
    )
    m_rb[6, 6] = rotor.inertia

    params = PlantParams(
        m_rb=m_rb,
        k_hydrostatic=k_hydrostatic,
        f_hydrostatic=f_hydrostatic,
        a_inf=hydro.default_added_mass(config),
        b_viscous=np.diag(np.asarray(config.section('viscous_damping')['diagonal'], dtype=float)),
        rotor=rotor,
        aero=AeroParams(
            cp=tuple(float(aero[f'cp_c{index}']) for index in range(1, 7)),
            cp_lambda_shift=float(aero['cp_lambda_shift']), cp_theta_cubic=float(aero['cp_theta_cubic']),
            ct_max=float(aero['ct_max']), ct_lambda=float(aero['ct_lambda']),
            ct_theta_decay=float(aero['ct_theta_decay']), feather_pitch=math.radians(float(aero['feather_pitch_deg'])),
            min_relative_wind=float(aero['min_relative_wind']), rho_air=float(turbine['rho_air']),
        ),
        controller=ControllerParams(
            kp=float(controller['kp']), ki=float(controller['ki']),
            pitch_min=math.radians(float(controller['pitch_min_deg'])),
            pitch_max=math.radians(float(controller['pitch_max_deg'])),
            pitch_rate=math.radians(float(controller['pitch_rate_deg'])),
            torque_limit_ratio=float(controller['torque_limit_ratio']),
        ),
        lines=lines,
        truth_radiation=hydro.default_truth_radiation_model(config),
        truth_wave=hydro.default_truth_wave_model(config),
        rho_water=rho,
        gravity=gravity,
    )
    params.validate()
    logger.debug(f'Platform mass {mass:.4g} kg, pitch restoring {k_hydrostatic[4, 4]:.4g} N m/rad')
    return params


def power_coefficient(tip_speed_ratio: float, pitch: float, aero: AeroParams) -> float:
    theta = max(math.degrees(pitch), 0.0)
    c1, c2, c3, c4, c5, c6 = aero.cp
    inverse = 1.0 / (tip_speed_ratio + aero.cp_lambda_shift * theta) - aero.cp_theta_cubic / (theta ** 3 + 1.0)
    value = c1 * (c2 * inverse - c3 * theta - c4) * math.exp(-c5 * inverse) + c6 * tip_speed_ratio
    return max(value, 0.0)


def thrust_coefficient(tip_speed_ratio: float, pitch: float, aero: AeroParams) -> float:
    theta = max(math.degrees(pitch), 0.0)
    return aero.ct_max * math.tanh(tip_speed_ratio / aero.ct_lambda) * math.exp(-aero.ct_theta_decay * theta)


def aero_loads(v_rel: float, omega_rotor: float, pitch: float, params: PlantParams) -> AeroLoads:
    """Rotor torque and thrust from the analytic coefficient surrogates"""
    aero, radius = params.aero, params.rotor.radius
    clamped = v_rel < aero.min_relative_wind
    if clamped:
        v_rel = aero.min_relative_wind
    if pitch >= aero.feather_pitch:
        return AeroLoads(0.0, 0.0, clamped)
    tip_speed_ratio = max(omega_rotor * radius / v_rel, 1e-6)
    dynamic = 0.5 * aero.rho_air * math.pi * radius ** 2 * v_rel ** 2
    torque = dynamic * radius * power_coefficient(tip_speed_ratio, pitch, aero) / tip_speed_ratio
    thrust = dynamic * thrust_coefficient(tip_speed_ratio, pitch, aero)
    return AeroLoads(torque, thrust, clamped)


def relative_wind(v_wind: float, xi: np.ndarray, xi_dot: np.ndarray, hub_height: float) -> float:
    return v_wind - xi_dot[0] - hub_height * math.cos(xi[4]) * xi_dot[4]


def generator_torque(omega_rotor: float, params: PlantParams) -> float:
    """Constant-power torque, saturated at the rated torque"""
    rotor = params.rotor
    limit = params.controller.torque_limit_ratio * rotor.rated_torque
    if omega_rotor <= 0.0:
        return limit
    return min(rotor.rated_power / (rotor.tau * omega_rotor), limit)


def control_step(
    omega_rotor: float,
    dt: float,
    ctrl: ControllerState,
    params: PlantParams,
) -> tuple[float, float, ControllerState]:
    """PI pitch on the speed error around the operating pitch, integrator frozen while saturated"""
    gains = params.controller
    error = omega_rotor - params.rotor.rated_speed
    unclipped = ctrl.pitch_offset + gains.kp * error + ctrl.integrator
    command = min(max(unclipped, gains.pitch_min), gains.pitch_max)
    integrator = ctrl.integrator
    saturated_high = unclipped > gains.pitch_max and error > 0
    saturated_low = unclipped < gains.pitch_min and error < 0
    if not (saturated_high or saturated_low):
        integrator += gains.ki * error * dt
    return command, generator_torque(omega_rotor, params), replace(ctrl, integrator=integrator)


def rate_limited_pitch(pitch_actual: float, command: float, dt: float, params: PlantParams) -> float:
    step = params.controller.pitch_rate * dt
    return pitch_actual + min(max(command - pitch_actual, -step), step)


def _hub_load(xi: np.ndarray, thrust: float, hub_height: float) -> np.ndarray:
    """World-horizontal thrust at the hub as a generalised force about the reference point"""
    hub = mooring.rotation_matrix(xi[3], xi[4], xi[5]) @ np.array([0.0, 0.0, hub_height])
    return np.array([thrust, 0.0, 0.0, 0.0, hub[2] * thrust, -hub[1] * thrust])


def _static_force(xi: np.ndarray, thrust: float, params: PlantParams, states: list[mooring.LineState]) -> np.ndarray:
    force = params.f_hydrostatic - params.k_hydrostatic @ xi + mooring.mooring_force(xi, params.lines, states)
    return force + _hub_load(xi, thrust, params.rotor.hub_height)


def find_equilibrium(v_wind: float, params: PlantParams) -> Equilibrium:
    """Steady pose, rotor speed, pitch and generator torque with calm sea and constant wind.

    Zero wind gives the parked mooring equilibrium with the rotor pinned at
    rated speed by convention.
    """
    rotor = params.rotor
    omega = rotor.rated_speed
    if v_wind == 0.0:
        pitch, q_g, thrust = params.controller.pitch_min, 0.0, 0.0
    elif v_wind < rotor.rated_wind_speed:
        raise ce.ConfigurationError(
            f'Wind speed {v_wind} m/s is below rated ({rotor.rated_wind_speed} m/s), only above-rated operation is modelled'
        )
    else:
        q_g = generator_torque(omega, params)

        def torque_balance(pitch: float) -> float:
            return aero_loads(v_wind, omega, pitch, params).q_aero - rotor.tau * q_g

        upper = min(math.radians(45.0), params.controller.pitch_max)
        if torque_balance(params.controller.pitch_min) < 0.0:
            raise ce.NumericalError(f'Rotor cannot reach rated power at {v_wind} m/s')
        pitch = brentq(torque_balance, params.controller.pitch_min, upper, xtol=1e-15, rtol=1e-15)
        thrust = aero_loads(v_wind, omega, pitch, params).thrust

    states = [mooring.LineState.healthy(line) for line in params.lines]
    scale = np.array([1.0, 1.0, 1.0, rotor.hub_height, rotor.hub_height, rotor.hub_height])
    reference = max(thrust, float(np.sum(mooring.line_tensions(np.zeros(6), params.lines, states))), 1e5)

    def scaled(xi: np.ndarray) -> np.ndarray:
        return _static_force(xi, thrust, params, states) / (reference * scale)

    xi = np.zeros(6)
    residual = scaled(xi)
    norm = float(np.linalg.norm(residual))
    steps = np.array([1e-4, 1e-4, 1e-4, 1e-6, 1e-6, 1e-6])
    for iteration in range(EQUILIBRIUM_MAX_ITER):
        if norm <= 1e-12:
            break
        jacobian = np.empty((6, 6))
        for dof in range(6):
            offset = np.zeros(6)
            offset[dof] = steps[dof]
            jacobian[:, dof] = (scaled(xi + offset) - scaled(xi - offset)) / (2.0 * steps[dof])
        step = np.linalg.solve(jacobian, -residual)
        largest = max(np.max(np.abs(step[:3])) / 10.0, np.max(np.abs(step[3:])) / 0.05, 1.0)
        step /= largest
        for _ in range(12):
            candidate = xi + step
            candidate_residual = scaled(candidate)
            candidate_norm = float(np.linalg.norm(candidate_residual))
            if candidate_norm < norm:
                break
            step *= 0.5
        else:
            break
        xi, residual, norm = candidate, candidate_residual, candidate_norm
        logger.debug(f'Equilibrium iteration {iteration}: scaled residual {norm:.3e}')
    if norm > 1e-6:
        raise ce.NumericalError(f'Equilibrium search at {v_wind} m/s stalled with scaled residual {norm:.3e}')

    tensions = mooring.line_tensions(xi, params.lines, states)
    logger.info(f'Equilibrium at {v_wind} m/s: surge {xi[0]:.3f} m, pitch {math.degrees(xi[4]):.3f} deg, '
                f'blade pitch {math.degrees(pitch):.3f} deg')
    return Equilibrium(xi=xi, omega=omega, pitch=pitch, q_g=q_g, tensions=tensions)


def mechanical_energy(state: PlantState, params: PlantParams) -> float:
    """Kinetic plus hydrostatic potential energy of the platform and rotor (mooring excluded)"""
    kinetic = 0.5 * state.xi_dot @ params.platform_mass_matrix @ state.xi_dot
    kinetic += 0.5 * params.rotor.inertia * state.omega_rotor ** 2
    potential = 0.5 * state.xi @ params.k_hydrostatic @ state.xi - params.f_hydrostatic @ state.xi
    return float(kinetic + potential)


def initial_state(params: PlantParams, equilibrium: Equilibrium, options: SimulationOptions) -> PlantState:
    xi = equilibrium.xi.copy()
    if options.initial_offset is not None:
        xi = xi + np.asarray(options.initial_offset, dtype=float)
    return PlantState(
        xi=xi,
        xi_dot=np.zeros(6),
        omega_rotor=equilibrium.omega,
        azimuth=0.0,
        x_rad_truth=np.zeros(params.truth_radiation.n),
        x_wave_truth=np.zeros(params.truth_wave.n),
        pitch_actual=equilibrium.pitch,
        ctrl=ControllerState(integrator=0.0, pitch_offset=equilibrium.pitch),
        line_states=[mooring.LineState.healthy(line) for line in params.lines],
    )


class _Dynamics:
    """Right-hand side of the truth model on the packed vector [xi, xi_dot, omega, azimuth, x_rad, x_wave]"""

    def __init__(self, params: PlantParams, v_wind: float, options: SimulationOptions) -> None:
        self.params = params
        self.v_wind = v_wind
        self.options = options
        self.mass_inverse = np.linalg.inv(params.platform_mass_matrix)
        self.radiation = params.truth_radiation
        self.wave = params.truth_wave
        self.n_rad = self.radiation.n
        self.clamped_steps = 0

    def pack(self, state: PlantState) -> np.ndarray:
        return np.concatenate([
            state.xi, state.xi_dot, [state.omega_rotor, state.azimuth], state.x_rad_truth, state.x_wave_truth,
        ])

    def unpack(self, vector: np.ndarray, state: PlantState) -> None:
        state.xi = vector[0:6].copy()
        state.xi_dot = vector[6:12].copy()
        state.omega_rotor = float(vector[12])
        state.azimuth = float(vector[13])
        state.x_rad_truth = vector[14:14 + self.n_rad].copy()
        state.x_wave_truth = vector[14 + self.n_rad:].copy()

    def __call__(self, vector: np.ndarray, eta: float, pitch: float, q_g: float,
                 line_states: list[mooring.LineState], hints: list[float]) -> np.ndarray:
        params, rotor = self.params, self.params.rotor
        xi, xi_dot, omega = vector[0:6], vector[6:12], vector[12]
        x_rad = vector[14:14 + self.n_rad]
        x_wave = vector[14 + self.n_rad:]

        force = params.f_hydrostatic - params.k_hydrostatic @ xi + mooring.mooring_force(xi, params.lines, line_states, hints)
        omega_dot = 0.0
        if self.options.aero:
            loads = aero_loads(relative_wind(self.v_wind, xi, xi_dot, rotor.hub_height), omega, pitch, params)
            self.clamped_steps += loads.clamped
            force += _hub_load(xi, loads.thrust, rotor.hub_height)
            omega_dot = (loads.q_aero - rotor.tau * q_g) / rotor.inertia
        if self.options.damping:
            force -= self.radiation.c @ x_rad + params.b_viscous @ xi_dot
            rad_dot = self.radiation.a @ x_rad + self.radiation.b @ xi_dot
        else:
            rad_dot = np.zeros(self.n_rad)
        force += self.wave.c @ x_wave + self.wave.d[:, 0] * eta
        wave_dot = self.wave.a @ x_wave + self.wave.b[:, 0] * eta
        return np.concatenate([xi_dot, self.mass_inverse @ force, [omega_dot, omega], rad_dot, wave_dot])


def simulate_plant(
    params: PlantParams,
    wave: hydro.WaveRealization,
    v_wind: float,
    duration: float,
    dt_out: float,
    faults: t.Sequence[mooring.FaultEvent] = (),
    noise: t.Sequence[float] = (0.0, 0.0, 0.0),
    seed: int = 0,
    equilibrium: Equilibrium | None = None,
    options: SimulationOptions | None = None,
) -> RunRecord:
    """Fixed-step RK4 run sampled every dt_out, with a digital controller and ZOH inputs.

    Faults take effect at the first inner step at or after their time.
    """
    options = options or SimulationOptions()
    inner_steps = dt_out / options.dt_inner
    if abs(inner_steps - round(inner_steps)) > 1e-9 or inner_steps < 1:
        raise ce.ConfigurationError(f'Output step {dt_out} s is not a multiple of the inner step {options.dt_inner} s')
    inner_steps = int(round(inner_steps))
    if abs(wave.dt - dt_out) > 1e-12:
        raise ce.ConfigurationError(f'Wave sample step {wave.dt} s differs from the output step {dt_out} s')
    samples = int(math.floor(duration / dt_out + 1e-9)) + 1
    if wave.eta.size < samples:
        raise ce.ConfigurationError(f'Wave realisation covers {wave.duration} s, the run needs {duration} s')
    for event in faults:
        if event.line_index > len(params.lines):
            raise ce.ConfigurationError(f'Fault on line {event.line_index} but the plant has {len(params.lines)} lines')

    equilibrium = equilibrium or find_equilibrium(v_wind, params)
    state = initial_state(params, equilibrium, options)
    dynamics = _Dynamics(params, v_wind, options)
    hints = [0.0] * len(params.lines)
    eta_series = np.append(wave.eta, wave.eta[-1]) if wave.eta.size == samples else wave.eta
    q_g = equilibrium.q_g
    pending = sorted(faults, key=lambda event: event.time)
    applied: list[mooring.FaultEvent] = []
    warned_pitch = False

    times = np.arange(samples) * dt_out
    inputs = np.empty((samples, 4))
    outputs = np.empty((samples, 3))
    tensions = np.empty((samples, len(params.lines)))
    h = options.dt_inner
    vector = dynamics.pack(state)

    logger.info(f'Simulating {duration} s at {v_wind} m/s with {len(faults)} fault(s)')
    for k in range(samples):
        line_tensions = [0.0] * len(params.lines)
        mooring.mooring_force(vector[0:6], params.lines, state.line_states, list(hints), line_tensions)
        tensions[k] = line_tensions
        outputs[k] = (vector[12], vector[0], vector[4])
        if not applied and abs(vector[4]) > PITCH_SANITY_BAND and not warned_pitch:
            logger.warning(f'Platform pitch {vector[4]:.3f} rad left the sanity band at t = {times[k]:.1f} s')
            warned_pitch = True

        if options.controller:
            command, q_g, state.ctrl = control_step(float(vector[12]), dt_out, state.ctrl, params)
            state.pitch_actual = rate_limited_pitch(state.pitch_actual, command, dt_out, params)
        elif not options.aero:
            q_g = 0.0
        inputs[k] = (state.pitch_actual, v_wind, q_g, eta_series[k])
        if k == samples - 1:
            break

        eta_start, eta_end = eta_series[k], eta_series[k + 1]
        for j in range(inner_steps):
            t_now = (k * inner_steps + j) * h
            while pending and t_now >= pending[0].time:
                event = pending.pop(0)
                state.line_states = mooring.apply_mooring_fault(state.line_states, event, t_now)
                applied.append(event)
                logger.info(f'Applied {event.kind.value} on line {event.line_index} at t = {t_now:.3f} s')
            fraction = j / inner_steps
            eta_0 = eta_start + (eta_end - eta_start) * fraction
            eta_half = eta_start + (eta_end - eta_start) * (fraction + 0.5 / inner_steps)
            eta_1 = eta_start + (eta_end - eta_start) * (fraction + 1.0 / inner_steps)
            arguments = (state.pitch_actual, q_g, state.line_states, hints)
            k1 = dynamics(vector, eta_0, *arguments)
            k2 = dynamics(vector + 0.5 * h * k1, eta_half, *arguments)
            k3 = dynamics(vector + 0.5 * h * k2, eta_half, *arguments)
            k4 = dynamics(vector + h * k3, eta_1, *arguments)
            candidate = vector + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(candidate)):
                raise ce.NumericalError(f'Plant state became non-finite after t = {t_now:.3f} s')
            vector = candidate

    dynamics.unpack(vector, state)
    for line_state, tension in zip(state.line_states, tensions[-1]):
        line_state.last_tension_fairlead = float(tension)
    if dynamics.clamped_steps:
        logger.warning(f'Relative wind was clamped in {dynamics.clamped_steps} load evaluations')

    rng = np.random.default_rng(seed)
    measured = outputs + rng.normal(0.0, 1.0, outputs.shape) * np.asarray(noise, dtype=float)
    return RunRecord(
        dt_out=dt_out, t=times, u=inputs, y=measured, outputs_clean=outputs, tensions=tensions,
        fault_log=tuple(applied), seed=seed, wave_seed=wave.seed, final_state=state,
    )
