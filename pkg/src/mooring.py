"""Quasi-static catenary mooring model and fault injection."""
import enum
import logging
import math
import typing as t
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq

import custom_errors as ce

logger = logging.getLogger(__name__)

MAX_BRACKET_DOUBLINGS = 80


class LineMode(enum.Enum):
    HEALTHY = 'healthy'
    FAIRLEAD_RELEASED = 'fairlead_released'
    ANCHOR_SLIPPED = 'anchor_slipped'


class FaultKind(enum.Enum):
    FAIRLEAD_RELEASE = 'fairlead_release'
    ANCHOR_SLIP = 'anchor_slip'


@dataclass(frozen=True)
class MooringLineParams:
    anchor: tuple[float, float, float]
    fairlead_body: tuple[float, float, float]
    length_unstretched: float
    weight_submerged: float
    ea: float
    water_depth: float

    def __post_init__(self) -> None:
        if not (self.weight_submerged > 0 and self.ea > 0 and self.length_unstretched > 0):
            raise ce.ValidationError('Mooring line weight, axial stiffness and length must be positive')


@dataclass
class LineState:
    mode: LineMode
    effective_length: float
    last_tension_fairlead: float = 0.0

    @classmethod
    def healthy(cls, line: MooringLineParams) -> 'LineState':
        return cls(mode=LineMode.HEALTHY, effective_length=line.length_unstretched)


@dataclass(frozen=True)
class FaultEvent:
    kind: FaultKind
    line_index: int
    time: float
    theta_x: float = 0.0

    def __post_init__(self) -> None:
        if self.line_index < 1:
            raise ce.ConfigurationError(f'Line indices start at 1, got {self.line_index}')
        if self.kind is FaultKind.ANCHOR_SLIP and not self.theta_x > 0:
            raise ce.ConfigurationError(f'Anchor slip needs a positive effective length, got {self.theta_x}')


class CatenarySolution(t.NamedTuple):
    horizontal: float
    vertical: float
    tension: float
    seabed_length: float


def rotation_matrix(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """R = Rz(yaw) Ry(pitch) Rx(roll)"""
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    return np.array([
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ])


def fairlead_position(line: MooringLineParams, pose: np.ndarray) -> np.ndarray:
    return np.asarray(pose[:3]) + rotation_matrix(pose[3], pose[4], pose[5]) @ np.asarray(line.fairlead_body)


def _hanging_length(w: float, ea: float, z: float) -> float:
    """Unstretched length of a vertical chain spanning height z"""
    return 2.0 * z / (1.0 + math.sqrt(1.0 + 2.0 * w * z / ea))


def _free_hanging_height(h: float, v: float, length: float, w: float, ea: float) -> float:
    va = v - w * length
    return (h / w) * (math.sqrt(1.0 + (v / h) ** 2) - math.sqrt(1.0 + (va / h) ** 2)) + (v * length - 0.5 * w * length ** 2) / ea


def _free_hanging_vertical(h: float, length: float, w: float, ea: float, z: float) -> float:
    lower = w * length
    step = max(h, lower)
    upper = lower + step
    for _ in range(MAX_BRACKET_DOUBLINGS):
        if _free_hanging_height(h, upper, length, w, ea) > z:
            break
        step *= 2.0
        upper = lower + step
    else:
        raise ce.CatenaryError('no vertical tension bracket for the suspended line', diagnostics={'h': h, 'z': z})
    return brentq(lambda v: _free_hanging_height(h, v, length, w, ea) - z, lower, upper, rtol=1e-12)


def _span(h: float, length: float, w: float, ea: float, z: float) -> tuple[float, float, float]:
    """Horizontal span, fairlead vertical tension and seabed length for horizontal tension h > 0"""
    c1 = h / w
    c2 = h * h / (2.0 * ea * w)
    rhs = c1 + c2 + z
    s = 2.0 * rhs / (c1 + math.sqrt(c1 * c1 + 4.0 * c2 * rhs))
    ratio = math.sqrt(max(s * s - 1.0, 0.0))
    v = h * ratio
    suspended = v / w
    if suspended <= length:
        return length - suspended + c1 * math.asinh(ratio) + h * length / ea, v, length - suspended
    v = _free_hanging_vertical(h, length, w, ea, z)
    va = v - w * length
    return c1 * (math.asinh(v / h) - math.asinh(va / h)) + h * length / ea, v, 0.0


def solve_catenary(
    line: MooringLineParams,
    fairlead_earth: np.ndarray,
    length: float | None = None,
    h_guess: float | None = None,
    rtol: float = 1e-10,
    line_index: int | None = None,
) -> CatenarySolution:
    """Elastic catenary with a frictionless seabed between the anchor and `fairlead_earth`.

    `length` overrides the unstretched length (slipped anchors).
    """
    length = line.length_unstretched if length is None else length
    w, ea = line.weight_submerged, line.ea
    span = math.hypot(fairlead_earth[0] - line.anchor[0], fairlead_earth[1] - line.anchor[1])
    height = fairlead_earth[2] - line.anchor[2]
    if height <= 0.0:
        raise ce.CatenaryError('fairlead is not above the anchor', line_index, {'z': float(height)})

    hanging = _hanging_length(w, ea, height)
    if hanging <= length and span <= length - hanging:
        vertical = w * hanging
        return CatenarySolution(0.0, vertical, vertical, length - hanging)

    def residual(h: float) -> float:
        return _span(h, length, w, ea, height)[0] - span

    diagnostics = {'span': float(span), 'height': float(height), 'length': float(length)}
    lower = upper = None
    if h_guess is not None and h_guess > 0.0:
        low, high = 0.98 * h_guess, 1.02 * h_guess
        if residual(low) < 0.0 < residual(high):
            lower, upper = low, high
    if lower is None:
        lower = 1e-9 * w * length
        if residual(lower) > 0.0:
            raise ce.CatenaryError('line cannot reach the fairlead even when slack', line_index, diagnostics)
        upper = max(w * length, 2.0 * (h_guess or 0.0))
        for _ in range(MAX_BRACKET_DOUBLINGS):
            if residual(upper) > 0.0:
                break
            lower, upper = upper, 2.0 * upper
        else:
            raise ce.CatenaryError('no horizontal tension bracket (line taut beyond its stretch range)',
                                   line_index, {**diagnostics, 'upper': upper})

    horizontal = brentq(residual, lower, upper, rtol=rtol)
    _, vertical, seabed = _span(horizontal, length, w, ea, height)
    return CatenarySolution(horizontal, vertical, math.hypot(horizontal, vertical), seabed)


def mooring_force(
    pose: np.ndarray,
    lines: t.Sequence[MooringLineParams],
    states: t.Sequence[LineState],
    h_hints: list[float] | None = None,
    tensions: list[float] | None = None,
) -> np.ndarray:
    """Generalised mooring force about the platform reference point.

    `h_hints` (per line) seed the root bracket and are updated in place.
    `tensions`, when given, receives the fairlead tension of every line.
    """
    if len(lines) != len(states):
        raise ce.ValidationError(f'{len(lines)} mooring lines but {len(states)} line states')
    pose = np.asarray(pose, dtype=float)
    rotation = rotation_matrix(pose[3], pose[4], pose[5])
    force = np.zeros(6)
    for index, (line, state) in enumerate(zip(lines, states)):
        if state.mode is LineMode.FAIRLEAD_RELEASED:
            if tensions is not None:
                tensions[index] = 0.0
            continue
        arm = rotation @ np.asarray(line.fairlead_body)
        fairlead = pose[:3] + arm
        solution = solve_catenary(
            line, fairlead, length=state.effective_length,
            h_guess=h_hints[index] if h_hints is not None else None, line_index=index,
        )
        if h_hints is not None:
            h_hints[index] = solution.horizontal
        if tensions is not None:
            tensions[index] = solution.tension
        towards_anchor = np.array([line.anchor[0] - fairlead[0], line.anchor[1] - fairlead[1]])
        distance = math.hypot(towards_anchor[0], towards_anchor[1])
        horizontal = solution.horizontal * towards_anchor / distance if distance > 0.0 else np.zeros(2)
        line_force = np.array([horizontal[0], horizontal[1], -solution.vertical])
        force[:3] += line_force
        force[3:] += np.cross(arm, line_force)
    return force


def line_tensions(pose: np.ndarray, lines: t.Sequence[MooringLineParams], states: t.Sequence[LineState]) -> np.ndarray:
    tensions = [0.0] * len(lines)
    mooring_force(pose, lines, states, tensions=tensions)
    return np.array(tensions)


def linearize_mooring_stiffness(
    lines: t.Sequence[MooringLineParams],
    states: t.Sequence[LineState],
    pose: np.ndarray,
    delta: float = 1e-3,
) -> np.ndarray:
    """Central-difference stiffness with F(pose + dx) ~ F(pose) - K dx"""
    if not delta > 0:
        raise ce.ConfigurationError(f'Stiffness perturbation must be positive, got {delta}')
    pose = np.asarray(pose, dtype=float)

    def differentiate(step: float) -> np.ndarray:
        stiffness = np.zeros((6, 6))
        for dof in range(6):
            offset = np.zeros(6)
            offset[dof] = step
            forward = mooring_force(pose + offset, lines, states)
            backward = mooring_force(pose - offset, lines, states)
            stiffness[:, dof] = -(forward - backward) / (2.0 * step)
        return stiffness

    try:
        return differentiate(delta)
    except ce.CatenaryError as error:
        logger.warning(f'Stiffness perturbation {delta} failed ({error}), retrying with {delta / 2}')
        return differentiate(delta / 2.0)


def apply_mooring_fault(states: t.Sequence[LineState], event: FaultEvent, t_now: float) -> list[LineState]:
    """Line states after `event` when it is due, otherwise an unchanged copy"""
    if event.line_index > len(states):
        raise ce.ConfigurationError(f'Fault on line {event.line_index} but only {len(states)} lines exist')
    updated = [replace(state) for state in states]
    if t_now < event.time:
        return updated
    index = event.line_index - 1
    if event.kind is FaultKind.FAIRLEAD_RELEASE:
        updated[index] = replace(updated[index], mode=LineMode.FAIRLEAD_RELEASED, last_tension_fairlead=0.0)
    elif updated[index].mode is not LineMode.FAIRLEAD_RELEASED:
        updated[index] = replace(updated[index], mode=LineMode.ANCHOR_SLIPPED, effective_length=event.theta_x)
    return updated


def resolve_fault_parameter(kind: FaultKind, parameter: float, design_length: float, reading: str) -> float:
    """Turn a fault-table parameter into theta_x (0 for a release, an unstretched length for a slip)"""
    if kind is FaultKind.FAIRLEAD_RELEASE:
        return 0.0
    if reading == 'added_seabed_length':
        theta_x = design_length + parameter
    elif reading == 'absolute':
        theta_x = parameter
    else:
        raise ce.ConfigurationError(f'Unknown anchor-slip reading "{reading}"')
    if theta_x == design_length:
        logger.warning('Anchor slip to the design length leaves the line unchanged')
    return theta_x


def default_mooring_lines(config) -> list[MooringLineParams]:
    mooring = config.section('mooring')
    platform = config.section('platform')
    rho, gravity = float(platform['rho_water']), float(platform['gravity'])
    diameter = float(mooring['diameter'])
    weight = (float(mooring['mass_per_length']) - rho * math.pi / 4.0 * diameter ** 2) * gravity
    depth = float(mooring['water_depth'])
    anchor_radius, fairlead_radius = float(mooring['anchor_radius']), float(mooring['fairlead_radius'])
    lines = []
    for angle in np.radians(np.asarray(mooring['line_angles_deg'], dtype=float)):
        direction = (math.cos(angle), math.sin(angle))
        lines.append(MooringLineParams(
            anchor=(anchor_radius * direction[0], anchor_radius * direction[1], -depth),
            fairlead_body=(fairlead_radius * direction[0], fairlead_radius * direction[1], float(mooring['fairlead_height'])),
            length_unstretched=float(mooring['length']),
            weight_submerged=weight,
            ea=float(mooring['ea']),
            water_depth=depth,
        ))
    logger.debug(f'Built {len(lines)} mooring lines with submerged weight {weight:.1f} N/m')
    return lines
