import numpy as np
import pytest

import custom_errors as ce
import detect
import model_io
import plant
import state_space as ss


@pytest.fixture
def labelled() -> ss.StateSpaceModel:
    return ss.StateSpaceModel(
        a=[[0.9, 0.1], [0.0, 0.8]], b=[[1.0], [1.0 / 3.0]], c=[[1.0, 0.0], [0.0, 2.0]], d=[[0.0], [0.25]],
        dt=0.1, input_labels=('wave_elevation',), output_labels=('surge_wave', 'pitch_wave'),
    )


@pytest.fixture
def detector(labelled) -> detect.DetectorModel:
    baseline = detect.BaselineStatistics(z_bar=np.array([0.1, -0.2]), sigma=np.array([[2.0, 0.3], [0.3, 1.0]]),
                                         mean_d=1.2, std_d=0.6)
    return detect.detector_from_parts(labelled, np.array([[0.5, 0.0], [0.1, 0.2]]), baseline, alpha=6.0,
                                      u_op=np.array([0.3]), y_op=np.array([1.0, 2.0]))


class TestStateSpaceFormat:
    def test_layout(self, labelled):
        lines = model_io.state_space_lines(labelled)
        assert lines[:4] == ['n,2', 'm,1', 'p,2', 'dt,0.10000000000000001']
        assert len(lines) == 4 + 2 + 2 + 2 + 2 + 2
        assert lines[-2:] == ['inputs,wave_elevation', 'outputs,surge_wave,pitch_wave']

    def test_file_keeps_every_digit(self, labelled, tmp_path):
        loaded = model_io.read_state_space(model_io.write_state_space(labelled, tmp_path / 'model.csv'))
        np.testing.assert_array_equal(loaded.b, labelled.b)
        assert loaded.dt == labelled.dt and loaded.output_labels == labelled.output_labels

    def test_zero_sample_time_means_continuous(self):
        model = ss.StateSpaceModel(a=[[-1.0]], b=[[1.0]], c=[[1.0]], d=[[0.0]])
        parsed = model_io.parse_state_space(model_io.state_space_lines(model))
        assert parsed.dt is None and not parsed.is_discrete

    def test_truncated_file(self, labelled):
        with pytest.raises(ce.ValidationError, match='truncated'):
            model_io.parse_state_space(model_io.state_space_lines(labelled)[:7])

    def test_malformed_header(self):
        with pytest.raises(ce.ValidationError, match='header'):
            model_io.parse_state_space(['n,two', 'm,1', 'p,1', 'dt,0.1'])

    def test_malformed_numbers(self, labelled):
        lines = model_io.state_space_lines(labelled)
        lines[4] = '0.9,abc'
        with pytest.raises(ce.ValidationError):
            model_io.parse_state_space(lines)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ce.ConfigurationError, match='does not exist'):
            model_io.read_state_space(tmp_path / 'absent.csv')


class TestAssembledFiles:
    def test_directory_contents(self, assembled, tmp_path):
        model_io.save_assembled_model(assembled, tmp_path)
        assert {path.name for path in tmp_path.iterdir()} == {
            'assembled.csv', 'mechanical.csv', 'block_map.txt', 'operating_point.csv'}
        loaded = model_io.load_assembled_model(tmp_path)
        assert loaded.block_map == assembled.block_map
        assert not loaded.ct.is_discrete and loaded.dt_model.dt == assembled.dt_model.dt
        np.testing.assert_array_equal(loaded.op.y_op, assembled.op.y_op)

    def test_block_map(self):
        assert model_io.parse_block_map('rotor 0 1\n\nradiation 13 19\n') == {'rotor': (0, 1), 'radiation': (13, 19)}
        with pytest.raises(ce.ValidationError):
            model_io.parse_block_map('rotor 0\n')

    def test_continuous_assembled_model_is_rejected(self, tmp_path):
        continuous = ss.StateSpaceModel(a=[[-1.0]], b=[[1.0]], c=[[1.0]], d=[[0.0]])
        model_io.write_state_space(continuous, tmp_path / 'assembled.csv')
        with pytest.raises(ce.ValidationError, match='discrete'):
            model_io.load_assembled_model(tmp_path)


class TestCalibrationFile:
    def test_sections(self, detector, tmp_path):
        text = model_io.write_calibration(detector, tmp_path / 'calibration.txt').read_text()
        headers = [line for line in text.splitlines() if line.startswith('[')]
        assert headers == ['[model]', '[l_gain]', '[q_cov]', '[r_cov]', '[u_op]', '[y_op]', '[zbar]', '[sigma]',
                           '[mean_d]', '[std_d]', '[alpha]', '[threshold]']

    def test_detector_is_restored(self, detector, tmp_path):
        restored = model_io.read_calibration(model_io.write_calibration(detector, tmp_path / 'calibration.txt'))
        assert restored.d_threshold == pytest.approx(1.2 + 6.0 * 0.6)
        np.testing.assert_array_equal(restored.l_gain, detector.l_gain)
        np.testing.assert_array_equal(restored.sigma, detector.sigma)
        np.testing.assert_array_equal(restored.y_op, detector.y_op)
        assert restored.sys.input_labels == detector.sys.input_labels

    def test_missing_sections(self, detector, tmp_path):
        path = model_io.write_calibration(detector, tmp_path / 'calibration.txt')
        path.write_text(path.read_text().split('[sigma]')[0])
        with pytest.raises(ce.ValidationError, match='sigma'):
            model_io.read_calibration(path)


class TestReports:
    def test_run_record_columns(self, tmp_path):
        samples = 5
        run = plant.RunRecord(dt_out=0.1, t=np.arange(samples) * 0.1, u=np.ones((samples, 4)), y=np.zeros((samples, 3)),
                              outputs_clean=np.zeros((samples, 3)), tensions=np.full((samples, 3), 1.5e6))
        path = model_io.write_run_record(run, tmp_path / 'runs' / 'case_0.csv')
        lines = path.read_text().splitlines()
        assert lines[0] == 't,theta,v,qg,eta,omega_rotor,surge,pitch_platform,T1,T2,T3'
        assert len(lines) == samples + 1
        assert lines[1].endswith('1500000,1500000,1500000')

    def test_detection_table_marks_raw_exceedances(self, tmp_path):
        report = detect.DetectionReport(
            t=np.array([0.0, 0.1, 0.2]), d_series=np.array([1.0, 5.0, 1.0]), threshold=3.0,
            raw_alarm=np.array([False, True, False]), confirmed_alarm=np.zeros(3, dtype=bool), alarms=[(0.1, 5.0)],
            first_confirmed_alarm=None, detection_delay=None, far=0.0, fault_time=None, false_alarm_bound=1 / 36,
        )
        lines = model_io.write_detection_table(report, tmp_path / 'detection.csv').read_text().splitlines()
        assert lines == ['t,d,threshold,alarm', '0,1,3,0', '0.1,5,3,1', '0.2,1,3,0']

    def test_summary_blanks_missing_values(self, tmp_path):
        path = model_io.write_summary([(1, 'true', 12.3, 0.0, 4.2, 6.0), (4, 'false', None, 0.001, 4.2, 6.0)],
                                      tmp_path / 'summary.csv')
        assert path.read_text().splitlines() == [
            'case,detected,delay_s,far,threshold,alpha', '1,true,12.3,0,4.2,6', '4,false,,0.001,4.2,6']
