"""Plain-text exchange formats for models, calibrations, runs and reports."""
import logging
import typing as t
from pathlib import Path

import numpy as np

import custom_errors as ce
import detect
import linmodel
import plant
import state_space as ss

logger = logging.getLogger(__name__)

RUN_COLUMNS = ('t', 'theta', 'v', 'qg', 'eta', 'omega_rotor', 'surge', 'pitch_platform')
SUMMARY_COLUMNS = ('case', 'detected', 'delay_s', 'far', 'threshold', 'alpha')
CALIBRATION_SECTIONS = ('zbar', 'sigma', 'mean_d', 'std_d', 'alpha', 'threshold')


def _rows(matrix: np.ndarray) -> list[str]:
    return [','.join(f'{value:.17g}' for value in row) for row in np.atleast_2d(matrix)]


def _parse_rows(lines: t.Sequence[str], columns: int) -> np.ndarray:
    if columns == 0:
        return np.zeros((len(lines), 0))
    try:
        return np.array([[float(value) for value in line.split(',')] for line in lines], dtype=float).reshape(-1, columns)
    except ValueError as error:
        raise ce.ValidationError(f'Malformed numeric block: {error}') from error


def _read_lines(path: Path) -> list[str]:
    if not path.exists():
        raise ce.ConfigurationError(f'File "{path}" does not exist')
    with open(path, 'r') as file:
        return [line.rstrip('\n') for line in file]


def _write_lines(path: Path, lines: t.Iterable[str]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as file:
        file.writelines(f'{line}\n' for line in lines)
    return path


def state_space_lines(model: ss.StateSpaceModel) -> list[str]:
    """4-line header `n,m,p,dt`, then A, B, C and D row-major, then optional label lines"""
    lines = [f'n,{model.n}', f'm,{model.m}', f'p,{model.p}', f'dt,{model.dt or 0.0:.17g}']
    for block in (model.a, model.b, model.c, model.d):
        lines.extend(_rows(block) if block.size else [''] * block.shape[0])
    if model.input_labels:
        lines.append('inputs,' + ','.join(model.input_labels))
    if model.output_labels:
        lines.append('outputs,' + ','.join(model.output_labels))
    return lines


def parse_state_space(lines: t.Sequence[str], source: str = '<memory>') -> ss.StateSpaceModel:
    header = {}
    for line in lines[:4]:
        key, _, value = line.partition(',')
        header[key.strip()] = value.strip()
    try:
        n, m, p, dt = int(header['n']), int(header['m']), int(header['p']), float(header['dt'])
    except (KeyError, ValueError) as error:
        raise ce.ValidationError(f'Model file "{source}" has a malformed n,m,p,dt header') from error
    body = list(lines[4:])
    sizes = ((n, n), (n, m), (p, n), (p, m))
    if len(body) < 2 * n + 2 * p:
        raise ce.ValidationError(f'Model file "{source}" is truncated')
    blocks = []
    for rows, columns in sizes:
        blocks.append(_parse_rows(body[:rows], columns))
        body = body[rows:]
    labels = {'inputs': (), 'outputs': ()}
    for line in body:
        key, _, value = line.partition(',')
        if key in labels:
            labels[key] = tuple(value.split(','))
    return ss.StateSpaceModel(*blocks, dt=dt if dt > 0 else None,
                              input_labels=labels['inputs'], output_labels=labels['outputs'])


def write_state_space(model: ss.StateSpaceModel, path: str | Path) -> Path:
    path = _write_lines(Path(path), state_space_lines(model))
    logger.debug(f'Model with {model.n} states written to "{path}"')
    return path


def read_state_space(path: str | Path) -> ss.StateSpaceModel:
    path = Path(path)
    return parse_state_space(_read_lines(path), str(path))


def write_text(text: str, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def parse_block_map(text: str) -> dict[str, tuple[int, int]]:
    block_map = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        try:
            name, start, stop = line.split()
            block_map[name] = (int(start), int(stop))
        except ValueError as error:
            raise ce.ValidationError(f'Malformed block map line "{line}"') from error
    return block_map


def _operating_point_lines(op: linmodel.OperatingPoint) -> list[str]:
    entries = {'v_wind': op.v_wind, 'omega': op.omega_eq, 'pitch': op.pitch_eq, 'q_g': op.q_g_eq}
    entries.update({f'xi{index + 1}': value for index, value in enumerate(op.xi_eq)})
    return [f'{key},{value:.17g}' for key, value in entries.items()]


def _parse_operating_point(lines: t.Sequence[str]) -> linmodel.OperatingPoint:
    entries = {}
    for line in lines:
        key, _, value = line.partition(',')
        if key:
            entries[key] = float(value)
    try:
        return linmodel.OperatingPoint(
            v_wind=entries['v_wind'], xi_eq=np.array([entries[f'xi{index}'] for index in range(1, 7)]),
            omega_eq=entries['omega'], pitch_eq=entries['pitch'], q_g_eq=entries['q_g'],
        )
    except KeyError as error:
        raise ce.ValidationError(f'Operating point file misses entry {error}') from error


def save_assembled_model(model: linmodel.AssembledModel, directory: str | Path) -> Path:
    """assembled.csv (discrete), mechanical.csv (continuous part), block_map.txt and operating_point.csv"""
    directory = Path(directory)
    write_state_space(model.dt_model, directory / 'assembled.csv')
    write_state_space(model.ct, directory / 'mechanical.csv')
    write_text(model.block_map_text(), directory / 'block_map.txt')
    if model.op is not None:
        _write_lines(directory / 'operating_point.csv', _operating_point_lines(model.op))
    logger.info(f'Assembled model written to "{directory}"')
    return directory


def load_assembled_model(directory: str | Path) -> linmodel.AssembledModel:
    directory = Path(directory)
    dt_model = read_state_space(directory / 'assembled.csv')
    if not dt_model.is_discrete:
        raise ce.ValidationError(f'Assembled model in "{directory}" must be discrete')
    op_path = directory / 'operating_point.csv'
    return linmodel.AssembledModel(
        ct=read_state_space(directory / 'mechanical.csv'),
        dt_model=dt_model,
        c_out=dt_model.c,
        block_map=parse_block_map('\n'.join(_read_lines(directory / 'block_map.txt'))),
        op=_parse_operating_point(_read_lines(op_path)) if op_path.exists() else None,
    )


def write_calibration(det: detect.DetectorModel, path: str | Path) -> Path:
    """Model exchange block and gain, followed by labelled statistic sections"""
    sections = {
        'model': state_space_lines(det.sys),
        'l_gain': _rows(det.l_gain),
        'q_cov': _rows(det.q_cov),
        'r_cov': _rows(det.r_cov),
        'u_op': _rows(det.u_op),
        'y_op': _rows(det.y_op),
        'zbar': _rows(det.z_bar),
        'sigma': _rows(det.sigma),
        'mean_d': [f'{det.mean_d:.17g}'],
        'std_d': [f'{det.std_d:.17g}'],
        'alpha': [f'{det.alpha:.17g}'],
        'threshold': [f'{det.d_threshold:.17g}'],
    }
    lines = []
    for name, body in sections.items():
        lines.append(f'[{name}]')
        lines.extend(body)
    path = _write_lines(Path(path), lines)
    logger.info(f'Calibration written to "{path}"')
    return path


def read_calibration(path: str | Path) -> detect.DetectorModel:
    path = Path(path)
    sections: dict[str, list[str]] = {}
    current = None
    for line in _read_lines(path):
        if line.startswith('[') and line.endswith(']'):
            current = sections.setdefault(line[1:-1], [])
        elif current is not None:
            current.append(line)
    missing = [name for name in ('model', 'l_gain', *CALIBRATION_SECTIONS) if name not in sections]
    if missing:
        raise ce.ValidationError(f'Calibration file "{path}" misses sections: {", ".join(missing)}')

    sys = parse_state_space(sections['model'], str(path))

    def vector(name: str, size: int) -> np.ndarray:
        return _parse_rows(sections[name], size).ravel()

    det = detect.DetectorModel(
        sys=sys,
        l_gain=_parse_rows(sections['l_gain'], sys.p),
        q_cov=_parse_rows(sections.get('q_cov', []), sys.n) if sections.get('q_cov') else np.zeros((sys.n, sys.n)),
        r_cov=_parse_rows(sections['r_cov'], sys.p) if sections.get('r_cov') else np.eye(sys.p),
        z_bar=vector('zbar', sys.p),
        sigma=_parse_rows(sections['sigma'], sys.p),
        mean_d=float(sections['mean_d'][0]),
        std_d=float(sections['std_d'][0]),
        alpha=float(sections['alpha'][0]),
        d_threshold=float(sections['threshold'][0]),
        u_op=vector('u_op', sys.m) if sections.get('u_op') else np.zeros(sys.m),
        y_op=vector('y_op', sys.p) if sections.get('y_op') else np.zeros(sys.p),
    )
    # Fails early on a covariance that is not positive definite
    det.sigma_factor
    return det


def write_run_record(run: plant.RunRecord, path: str | Path) -> Path:
    tension_columns = tuple(f'T{index + 1}' for index in range(run.tensions.shape[1]))
    table = np.column_stack([run.t, run.u, run.y, run.tensions])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, table, delimiter=',', header=','.join(RUN_COLUMNS + tension_columns), comments='', fmt='%.9g')
    return path


def write_linear_tracking(t: np.ndarray, truth: np.ndarray, linear: np.ndarray, path: str | Path) -> Path:
    header = ['t'] + [f'{name}_truth' for name in plant.OUTPUT_NAMES] + [f'{name}_linear' for name in plant.OUTPUT_NAMES]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, np.column_stack([t, truth, linear]), delimiter=',', header=','.join(header), comments='', fmt='%.9g')
    return path


def write_detection_table(report: detect.DetectionReport, path: str | Path) -> Path:
    """`t, d, threshold, alarm` with alarm 1 on every raw threshold exceedance"""
    table = np.column_stack([
        report.t, report.d_series, np.full(report.t.size, report.threshold), report.raw_alarm.astype(float),
    ])
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, table, delimiter=',', header='t,d,threshold,alarm', comments='', fmt=['%.9g', '%.9g', '%.9g', '%d'])
    return path


def write_summary(rows: t.Iterable[t.Sequence], path: str | Path) -> Path:
    lines = [','.join(SUMMARY_COLUMNS)]
    for row in rows:
        lines.append(','.join('' if value is None else (f'{value:.6g}' if isinstance(value, float) else str(value))
                              for value in row))
    return _write_lines(Path(path), lines)
