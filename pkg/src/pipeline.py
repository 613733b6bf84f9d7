"""Offline identification, healthy calibration and scenario runs, as called by the command line."""
import asyncio
import contextlib
import logging
import math
import typing as t
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

import custom_context as cc
import custom_errors as ce
import detect
import hydro
import linmodel
import model_io
import mooring
import plant
import state_space as ss
import sysid

logger = logging.getLogger(__name__)

HEALTHY_CASE = 0


class IdentificationResult(t.NamedTuple):
    radiation: ss.StateSpaceModel
    wave_force: ss.StateSpaceModel
    radiation_report: sysid.FitReport
    wave_report: sysid.FitReport
    assembled: linmodel.AssembledModel


@dataclass(frozen=True)
class ScenarioOutcome:
    case: int
    detected: bool
    detection_delay: float | None
    far: float
    threshold: float
    alpha: float
    first_alarm: float | None = None
    paths: dict[str, Path] = field(default_factory=dict)
    error: str | None = None

    def summary_row(self) -> tuple:
        return (self.case, 'true' if self.detected else 'false', self.detection_delay, self.far, self.threshold,
                self.alpha)


@contextlib.contextmanager
def stage(name: str) -> t.Iterator[None]:
    """Log the start of a pipeline stage and name it in any failure"""
    logger.info(f'Stage "{name}" started')
    try:
        yield
    except ce.WorkbenchError as error:
        logger.error(f'Stage "{name}" failed: {error}')
        error.add_note(f'stage: {name}')
        raise


def derived_seeds(seed: int) -> tuple[int, int]:
    """Independent (wave, noise) seeds from one base seed"""
    wave, noise = np.random.SeedSequence(seed).spawn(2)
    return int(wave.generate_state(1)[0]), int(noise.generate_state(1)[0])


def model_directory(config: cc.RunConfig) -> Path:
    return config.output_dir / 'models'


def calibration_path(config: cc.RunConfig) -> Path:
    return config.output_dir / 'calibration.csv'


def synthesize_dataset(config: cc.RunConfig) -> hydro.HydroFrd:
    spec = hydro.WaveSpec.from_config(config)
    return hydro.generate_synthetic_hydro_dataset(
        hydro.default_truth_radiation_model(config),
        hydro.default_truth_wave_model(config),
        hydro.default_added_mass(config),
        spec.omega_grid,
        wave_shift=float(config.section('truth_wave')['shift']),
    )


def obtain_dataset(config: cc.RunConfig) -> hydro.HydroFrd:
    if config.hydro_dataset is not None:
        return hydro.load_hydro_dataset(config.hydro_dataset)
    if not config.section('identification').get('synthesize', False):
        raise ce.ConfigurationError('No hydrodynamic dataset: set identification.dataset or enable identification.synthesize')
    return synthesize_dataset(config)


def export_wave(config: cc.RunConfig, path: Path | None = None) -> Path:
    simulation = config.section('simulation')
    wave_seed, _ = derived_seeds(config.seed)
    wave = hydro.realize_wave_elevation(
        hydro.WaveSpec.from_config(config, wave_seed), float(simulation['dt_out']), float(simulation['duration']),
    )
    path = path or config.output_dir / 'wave.csv'
    path.parent.mkdir(parents=True, exist_ok=True)
    hydro.export_wave_realization(wave, path)
    return path


def identify(config: cc.RunConfig) -> IdentificationResult:
    """Radiation and wave-force fits, then the assembled linear model, all written under models/"""
    identification = config.section('identification')
    dt = float(config.section('simulation')['dt_out'])
    band = (float(identification['band_min']), float(identification['band_max']))
    options = {
        'dt': dt, 'duration': float(identification['kernel_duration']), 'band': band,
        'max_iter': int(identification['pem_max_iter']), 'tol': float(identification['pem_tol']),
    }
    with stage('hydrodynamic dataset'):
        frd = obtain_dataset(config)
        hydro.save_hydro_dataset(frd, config.output_dir / 'hydro')
    with stage('radiation fit'):
        radiation, radiation_report = sysid.fit_radiation_model(
            frd, int(identification['radiation_order']), identification['radiation_dofs'], **options,
        )
    with stage('wave-force fit'):
        wave_force, wave_report = sysid.fit_wave_force_model(
            frd, int(identification['wave_order']), float(identification['causal_shift']),
            identification['wave_dofs'], lead=float(identification['kernel_lead']), **options,
        )
    with stage('linear model assembly'):
        params = plant.default_plant_params(config)
        assembled = linmodel.build_operating_model(
            params, float(config.section('simulation')['wind_speed']), radiation, wave_force, dt,
            stiffness_delta=float(config.section('mooring')['stiffness_delta']),
        )

    directory = model_directory(config)
    model_io.write_state_space(radiation, directory / 'radiation.csv')
    model_io.write_state_space(wave_force, directory / 'wave_force.csv')
    model_io.write_text(radiation_report.as_text(), directory / 'radiation_fit.txt')
    model_io.write_text(wave_report.as_text(), directory / 'wave_fit.txt')
    model_io.save_assembled_model(assembled, directory)
    return IdentificationResult(radiation, wave_force, radiation_report, wave_report, assembled)


def load_assembled(config: cc.RunConfig) -> linmodel.AssembledModel:
    directory = model_directory(config)
    if not (directory / 'assembled.csv').exists():
        raise ce.ConfigurationError(f'No assembled model in "{directory}", run identify first')
    return model_io.load_assembled_model(directory)


def load_detector(config: cc.RunConfig) -> detect.DetectorModel:
    path = calibration_path(config)
    if not path.exists():
        raise ce.ConfigurationError(f'No calibration at "{path}", run calibrate first')
    return model_io.read_calibration(path)


def scenario_cases(config: cc.RunConfig) -> dict[int, dict]:
    return {int(case['case']): case for case in config.section('scenarios')['cases']}


def build_fault(config: cc.RunConfig, case_id: int, parameter: float | None = None) -> mooring.FaultEvent | None:
    """Fault event of a load case (None for the healthy case)"""
    if case_id == HEALTHY_CASE:
        return None
    cases = scenario_cases(config)
    if case_id not in cases:
        raise ce.ConfigurationError(f'Unknown load case {case_id}, configured cases are {sorted(cases)}')
    case = cases[case_id]
    kind = mooring.FaultKind(case['kind'])
    theta_x = mooring.resolve_fault_parameter(
        kind,
        float(case['parameter'] if parameter is None else parameter),
        float(config.section('mooring')['length']),
        config.section('scenarios')['anchor_slip_reading'],
    )
    time = float(case.get('time', config.section('simulation')['fault_time']))
    return mooring.FaultEvent(kind=kind, line_index=int(case['line']), time=time, theta_x=theta_x)


def simulate_case(
    config: cc.RunConfig,
    fault: mooring.FaultEvent | None,
    seed: int,
    params: plant.PlantParams | None = None,
    equilibrium: plant.Equilibrium | None = None,
) -> plant.RunRecord:
    simulation, noise = config.section('simulation'), config.section('noise')
    params = params or plant.default_plant_params(config)
    dt_out, duration = float(simulation['dt_out']), float(simulation['duration'])
    wave_seed, noise_seed = derived_seeds(seed)
    wave = hydro.realize_wave_elevation(hydro.WaveSpec.from_config(config, wave_seed), dt_out, duration)
    return plant.simulate_plant(
        params, wave, float(simulation['wind_speed']), duration, dt_out,
        faults=() if fault is None else (fault,),
        noise=(float(noise['rotor_speed']), float(noise['surge']), float(noise['pitch'])),
        seed=noise_seed,
        equilibrium=equilibrium,
        options=plant.SimulationOptions(dt_inner=float(simulation['dt_inner'])),
    )


def _baseline_samples(config: cc.RunConfig) -> int:
    detector, simulation = config.section('detector'), config.section('simulation')
    dt = float(simulation['dt_out'])
    stop = min(float(detector['baseline_stop']), float(simulation['duration']))
    span = stop - float(detector['baseline_start'])
    return int(math.floor(span / dt + 1e-9)) + 1 if span >= 0 else 0


def linear_tracking(model: linmodel.AssembledModel, run: plant.RunRecord) -> tuple[np.ndarray, np.ndarray]:
    """Noise-free truth outputs and linear-model outputs, both in deviations from the operating point"""
    op = model.op
    u_op = op.u_op if op is not None else np.zeros(4)
    y_op = op.y_op if op is not None else np.zeros(3)
    return run.outputs_clean - y_op, linmodel.simulate_linear_model(model, run.u - u_op)


def calibrate(config: cc.RunConfig) -> detect.DetectorModel:
    """Healthy run with the calibration seed, then the detector gain, baseline and threshold"""
    settings = detect.DetectorSettings.from_config(config)
    samples = _baseline_samples(config)
    if samples < settings.min_baseline_samples:
        raise ce.ConfigurationError(
            f'Simulation of {config.section("simulation")["duration"]} s gives {samples} baseline samples, '
            f'at least {settings.min_baseline_samples} are needed'
        )
    model = load_assembled(config)
    with stage('healthy calibration run'):
        seed = config.seed + int(config.section('seeds')['calibration_offset'])
        run = simulate_case(config, None, seed)
    truth, linear = linear_tracking(model, run)
    window = (run.t >= settings.baseline_start) & (run.t <= settings.baseline_stop)
    nrmse = linmodel.normalized_rmse(truth[window], linear[window])
    logger.info('Linear-model tracking NRMSE: ' + ', '.join(
        f'{name} {value:.1%}' for name, value in zip(plant.OUTPUT_NAMES, nrmse)))
    with stage('detector calibration'):
        det = detect.calibrate_detector(model, run, settings)
    model_io.write_calibration(det, calibration_path(config))
    return det


def run_case(config: cc.RunConfig, case_id: int, parameter: float | None = None) -> ScenarioOutcome:
    """Simulate one load case, run the detector on it and write its run, report and detection files"""
    det = load_detector(config)
    hold = int(config.section('detector')['hold'])
    transient = float(config.section('detector')['baseline_start'])
    fault = build_fault(config, case_id, parameter)
    with stage(f'load case {case_id}'):
        run = simulate_case(config, fault, config.seed)
        report = detect.run_detection(det, run, hold, fault.time if fault else None, transient)

    out = config.output_dir
    paths = {
        'run': model_io.write_run_record(run, out / 'runs' / f'case_{case_id}.csv'),
        'report': model_io.write_text(f'case={case_id}\n' + report.as_text(), out / 'reports' / f'case_{case_id}.txt'),
        'detection': model_io.write_detection_table(report, out / 'reports' / f'case_{case_id}_detection.csv'),
    }
    if case_id == HEALTHY_CASE:
        model = load_assembled(config)
        truth, linear = linear_tracking(model, run)
        paths['linear'] = model_io.write_linear_tracking(run.t, truth, linear, out / 'runs' / f'case_{case_id}_linear.csv')

    outcome = ScenarioOutcome(
        case=case_id,
        detected=fault is not None and report.detected,
        detection_delay=report.detection_delay if fault is not None else None,
        far=report.far,
        threshold=report.threshold,
        alpha=det.alpha,
        first_alarm=report.first_confirmed_alarm,
        paths=paths,
    )
    delay = 'none' if outcome.detection_delay is None else f'{outcome.detection_delay:.1f} s'
    logger.info(f'Load case {case_id}: detected {outcome.detected}, delay {delay}, FAR {outcome.far:.4f}')
    return outcome


def run_case_safe(config: cc.RunConfig, case_id: int) -> ScenarioOutcome:
    """run_case that turns workbench errors into a failed outcome, so a batch keeps going"""
    try:
        return run_case(config, case_id)
    except ce.WorkbenchError as error:
        logger.error(f'Load case {case_id} failed: {error}')
        return ScenarioOutcome(case=case_id, detected=False, detection_delay=None, far=math.nan,
                               threshold=math.nan, alpha=math.nan, error=str(error))


async def run_batch_async(config: cc.RunConfig) -> list[ScenarioOutcome]:
    cases = [HEALTHY_CASE] + sorted(scenario_cases(config))
    loop = asyncio.get_running_loop()
    if config.parallel:
        with ProcessPoolExecutor(max_workers=len(cases)) as pool:
            outcomes = await asyncio.gather(*(loop.run_in_executor(pool, run_case_safe, config, case) for case in cases))
    else:
        outcomes = [await loop.run_in_executor(None, run_case_safe, config, case) for case in cases]
    model_io.write_summary((outcome.summary_row() for outcome in outcomes), config.output_dir / 'summary.csv')
    return list(outcomes)


def run_batch(config: cc.RunConfig) -> list[ScenarioOutcome]:
    return asyncio.run(run_batch_async(config))


def gate_failures(config: cc.RunConfig, outcomes: t.Sequence[ScenarioOutcome]) -> list[str]:
    gates = config.section('gates')
    by_case = {outcome.case: outcome for outcome in outcomes}
    failures = [f'case {outcome.case} failed: {outcome.error}' for outcome in outcomes if outcome.error]
    max_delay, max_far = float(gates['max_delay_s']), float(gates['max_far'])
    for case in gates['required_detected']:
        outcome = by_case.get(int(case))
        if outcome is None or outcome.error:
            continue
        if not outcome.detected:
            failures.append(f'case {case} was not detected')
        elif outcome.detection_delay > max_delay:
            failures.append(f'case {case} detected after {outcome.detection_delay:.1f} s (limit {max_delay} s)')
    for outcome in outcomes:
        if not outcome.error and outcome.far > max_far:
            failures.append(f'case {outcome.case} false-alarm rate {outcome.far:.4f} exceeds {max_far}')
    healthy = by_case.get(HEALTHY_CASE)
    if gates.get('healthy_case_clean', True) and healthy is not None and healthy.first_alarm is not None:
        failures.append(f'healthy case raised a confirmed alarm at {healthy.first_alarm:.1f} s')
    return failures


def check_gates(config: cc.RunConfig, outcomes: t.Sequence[ScenarioOutcome]) -> None:
    if failures := gate_failures(config, outcomes):
        raise ce.AcceptanceGateError('Acceptance gates failed: ' + '; '.join(failures))
    logger.info('All acceptance gates passed')
