import math
import shutil
from dataclasses import replace

import numpy as np
import pytest

import custom_errors as ce
import mooring
import pipeline


def outcome(case: int, detected: bool = True, delay: float | None = 5.0, far: float = 0.0, **extra):
    return pipeline.ScenarioOutcome(case=case, detected=detected, detection_delay=delay, far=far, threshold=4.0,
                                    alpha=6.0, **extra)


HEALTHY = outcome(0, detected=False, delay=None)


class TestSeeds:
    def test_repeatable_and_independent(self):
        assert pipeline.derived_seeds(20211) == pipeline.derived_seeds(20211)
        wave, noise = pipeline.derived_seeds(20211)
        assert wave != noise
        assert pipeline.derived_seeds(20212)[0] != wave


class TestLoadCases:
    def test_configured_cases(self, config):
        assert sorted(pipeline.scenario_cases(config)) == [1, 2, 3, 4]

    def test_healthy_case_has_no_fault(self, config):
        assert pipeline.build_fault(config, pipeline.HEALTHY_CASE) is None

    def test_release(self, config):
        fault = pipeline.build_fault(config, 3)
        assert fault == mooring.FaultEvent(mooring.FaultKind.FAIRLEAD_RELEASE, 2, 1500.0, 0.0)

    def test_anchor_slip_adds_seabed_length(self, config):
        fault = pipeline.build_fault(config, 2)
        assert fault.kind is mooring.FaultKind.ANCHOR_SLIP and fault.line_index == 1
        assert fault.theta_x == pytest.approx(707.0 + 150.0)

    def test_parameter_override(self, config):
        assert pipeline.build_fault(config, 4, parameter=100.0).theta_x == pytest.approx(807.0)

    def test_absolute_reading(self, config):
        absolute = config.with_section('scenarios', anchor_slip_reading='absolute')
        assert pipeline.build_fault(absolute, 4).theta_x == pytest.approx(250.0)

    def test_slip_to_the_design_length_is_a_null_fault(self, config, caplog):
        fault = pipeline.build_fault(config, 4, parameter=0.0)
        assert fault.kind is mooring.FaultKind.ANCHOR_SLIP and fault.theta_x == pytest.approx(707.0)
        assert 'leaves the line unchanged' in caplog.text

    def test_unknown_case(self, config):
        with pytest.raises(ce.ConfigurationError, match='Unknown load case'):
            pipeline.build_fault(config, 9)


class TestGates:
    def test_all_passing(self, config):
        outcomes = [HEALTHY, outcome(1), outcome(2), outcome(3), outcome(4)]
        assert pipeline.gate_failures(config, outcomes) == []
        pipeline.check_gates(config, outcomes)

    def test_bottom_segment_fault_is_required(self, config):
        outcomes = [HEALTHY, outcome(1), outcome(2), outcome(3), outcome(4, detected=False, delay=None)]
        assert pipeline.gate_failures(config, outcomes) == ['case 4 was not detected']

    def test_missed_and_late_detections(self, config):
        outcomes = [HEALTHY, outcome(1, detected=False, delay=None), outcome(2, delay=45.0), outcome(3)]
        failures = pipeline.gate_failures(config, outcomes)
        assert failures == ['case 1 was not detected', 'case 2 detected after 45.0 s (limit 30.0 s)']
        with pytest.raises(ce.AcceptanceGateError) as info:
            pipeline.check_gates(config, outcomes)
        assert info.value.exit_code == 4

    def test_false_alarm_rate(self, config):
        failures = pipeline.gate_failures(config, [HEALTHY, outcome(1, far=0.05), outcome(2), outcome(3)])
        assert len(failures) == 1 and 'false-alarm rate' in failures[0]

    def test_alarm_in_the_healthy_case(self, config):
        healthy = outcome(0, detected=False, delay=None, first_alarm=812.3)
        failures = pipeline.gate_failures(config, [healthy, outcome(1), outcome(2), outcome(3)])
        assert failures == ['healthy case raised a confirmed alarm at 812.3 s']

    def test_failed_case_is_reported_once(self, config):
        broken = pipeline.ScenarioOutcome(case=2, detected=False, detection_delay=None, far=math.nan,
                                          threshold=math.nan, alpha=math.nan, error='mooring solver diverged')
        failures = pipeline.gate_failures(config, [HEALTHY, outcome(1), broken, outcome(3)])
        assert failures == ['case 2 failed: mooring solver diverged']


class TestStages:
    def test_failure_names_the_stage(self):
        with pytest.raises(ce.NumericalError) as info:
            with pipeline.stage('radiation fit'):
                raise ce.NumericalError('singular Hankel matrix')
        assert 'stage: radiation fit' in info.value.__notes__

    def test_missing_inputs(self, config, tmp_path):
        empty = replace(config, output_dir=tmp_path)
        with pytest.raises(ce.ConfigurationError, match='run identify first'):
            pipeline.load_assembled(empty)
        with pytest.raises(ce.ConfigurationError, match='run calibrate first'):
            pipeline.run_case(empty, 1)

    def test_short_simulation_cannot_be_calibrated(self, config, tmp_path):
        short = replace(config, output_dir=tmp_path).with_section('simulation', duration=250.0)
        with pytest.raises(ce.ConfigurationError, match='baseline samples'):
            pipeline.calibrate(short)

    def test_no_dataset_source(self, config):
        with pytest.raises(ce.ConfigurationError, match='hydrodynamic dataset'):
            pipeline.obtain_dataset(config.with_section('identification', synthesize=False))

    def test_faulted_run_shares_the_healthy_prefix(self, config, plant_params, equilibrium):
        short = config.with_section('simulation', duration=120.0, fault_time=100.0)
        healthy = pipeline.simulate_case(short, None, 7, plant_params, equilibrium)
        faulty = pipeline.simulate_case(short, pipeline.build_fault(short, 1), 7, plant_params, equilibrium)
        before = healthy.t <= 100.0
        assert np.array_equal(healthy.t, faulty.t)
        assert np.array_equal(healthy.y[before], faulty.y[before])
        assert np.array_equal(healthy.u[before], faulty.u[before])
        assert not np.array_equal(healthy.y[~before], faulty.y[~before])

    def test_wave_export_uses_the_wave_seed(self, config, tmp_path):
        path = pipeline.export_wave(replace(config, output_dir=tmp_path))
        assert path == tmp_path / 'wave.csv'
        table = np.loadtxt(path, delimiter=',', skiprows=1)
        assert table.shape == (16001, 2) and table[-1, 0] == pytest.approx(1600.0)


@pytest.mark.slow
class TestEndToEnd:
    @pytest.fixture(scope='class')
    def workspace(self, config, tmp_path_factory):
        return replace(config, output_dir=tmp_path_factory.mktemp('pipeline'))

    @pytest.fixture(scope='class')
    def identified(self, workspace):
        return pipeline.identify(workspace)

    @pytest.fixture(scope='class')
    def outcomes(self, workspace, identified):
        pipeline.calibrate(workspace)
        return pipeline.run_batch(workspace)

    def test_identification_outputs(self, workspace, identified):
        models = pipeline.model_directory(workspace)
        for name in ('radiation.csv', 'wave_force.csv', 'radiation_fit.txt', 'wave_fit.txt', 'assembled.csv'):
            assert (models / name).exists()
        assert max(identified.radiation_report.hinf_band) <= 0.05
        assert max(identified.wave_report.hinf_band) <= 0.08
        assert identified.assembled.dt_model.is_stable()

    def test_batch_outputs(self, workspace, outcomes):
        assert [item.case for item in outcomes] == [0, 1, 2, 3, 4]
        lines = (workspace.output_dir / 'summary.csv').read_text().splitlines()
        assert lines[0] == 'case,detected,delay_s,far,threshold,alpha' and len(lines) == 6
        assert (workspace.output_dir / 'runs' / 'case_0_linear.csv').exists()
        assert (workspace.output_dir / 'reports' / 'case_3_detection.csv').exists()

    def test_acceptance_gates(self, workspace, outcomes):
        assert pipeline.gate_failures(workspace, outcomes) == []
        assert all(item.threshold == outcomes[0].threshold for item in outcomes)
        assert next(item for item in outcomes if item.case == 4).detected

    def test_parallel_batch_matches_serial(self, workspace, outcomes, tmp_path):
        shutil.copytree(pipeline.model_directory(workspace), tmp_path / 'models')
        shutil.copy2(pipeline.calibration_path(workspace), tmp_path / 'calibration.csv')
        parallel = pipeline.run_batch(replace(workspace, output_dir=tmp_path, parallel=True))
        assert [item.summary_row() for item in parallel] == [item.summary_row() for item in outcomes]
        assert (tmp_path / 'summary.csv').read_bytes() == (workspace.output_dir / 'summary.csv').read_bytes()
        for case in range(5):
            name = f'case_{case}.csv'
            assert (tmp_path / 'runs' / name).read_bytes() == (workspace.output_dir / 'runs' / name).read_bytes()

    def test_slip_to_the_design_length_is_not_detected(self, workspace, outcomes):
        # Overwrites the case 4 files, keep it last
        null = pipeline.run_case(workspace, 4, parameter=0.0)
        assert null.detected is False and null.first_alarm is None
