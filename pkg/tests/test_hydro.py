import math

import numpy as np
import pytest

import custom_errors as ce
import hydro


@pytest.fixture
def spec(config) -> hydro.WaveSpec:
    return hydro.WaveSpec.from_config(config, seed=7)


class TestJonswap:
    def test_significant_height_on_the_grid(self, spec):
        assert 4.0 * math.sqrt(hydro.wave_variance_on_grid(spec)) == pytest.approx(spec.hs, rel=1e-12)

    def test_peak_is_at_the_peak_frequency(self, spec):
        omega = np.linspace(0.3, 2.0, 20001)
        density = hydro.jonswap_spectrum(spec, omega)
        assert omega[np.argmax(density)] == pytest.approx(spec.omega_peak, rel=2e-3)

    def test_peak_enhancement_raises_the_peak(self, config):
        plain = hydro.WaveSpec(hs=2.66, tp=7.42, gamma=1.0)
        peaked = hydro.WaveSpec(hs=2.66, tp=7.42, gamma=3.3)
        assert hydro.jonswap_spectrum(peaked, peaked.omega_peak) > hydro.jonswap_spectrum(plain, plain.omega_peak)

    @pytest.mark.parametrize('omega', [0.0, -1.0])
    def test_non_positive_frequency(self, spec, omega):
        with pytest.raises(ce.DomainError):
            hydro.jonswap_spectrum(spec, omega)

    def test_invalid_parameters(self):
        with pytest.raises(ce.ConfigurationError):
            hydro.WaveSpec(hs=-1.0, tp=7.42)
        with pytest.raises(ce.ConfigurationError):
            hydro.WaveSpec(hs=2.0, tp=7.42, gamma=0.5)


class TestRealization:
    def test_seeded_realisations_repeat(self, spec):
        first = hydro.realize_wave_elevation(spec, 0.1, 600.0)
        second = hydro.realize_wave_elevation(spec, 0.1, 600.0)
        np.testing.assert_array_equal(first.eta, second.eta)
        assert first.eta.size == 6001 and first.duration == pytest.approx(600.0)

    def test_different_seeds_differ(self, config):
        first = hydro.realize_wave_elevation(hydro.WaveSpec.from_config(config, seed=1), 0.1, 600.0)
        second = hydro.realize_wave_elevation(hydro.WaveSpec.from_config(config, seed=2), 0.1, 600.0)
        assert not np.allclose(first.eta, second.eta)

    def test_variance_matches_the_spectrum(self, spec):
        wave = hydro.realize_wave_elevation(spec, 0.1, 6000.0)
        assert wave.eta.var() == pytest.approx(hydro.wave_variance_on_grid(spec), rel=0.1)
        assert abs(wave.eta.mean()) < 0.05

    def test_short_duration_is_rejected(self, spec):
        with pytest.raises(ce.ConfigurationError):
            hydro.realize_wave_elevation(spec, 0.1, 5.0 * spec.tp)

    def test_export(self, spec, tmp_path):
        wave = hydro.realize_wave_elevation(spec, 0.1, 100.0)
        path = tmp_path / 'wave.csv'
        hydro.export_wave_realization(wave, path)
        table = np.loadtxt(path, delimiter=',', skiprows=1)
        assert path.read_text().splitlines()[0] == 't,eta'
        np.testing.assert_allclose(table[:, 1], wave.eta, rtol=1e-8, atol=1e-9)


class TestTruthModels:
    def test_orders_and_stability(self, config):
        radiation = hydro.default_truth_radiation_model(config)
        wave = hydro.default_truth_wave_model(config)
        assert (radiation.n, radiation.m, radiation.p) == (12, 6, 6)
        assert (wave.n, wave.m, wave.p) == (16, 1, 6)
        assert radiation.is_stable() and wave.is_stable()

    def test_wave_force_only_on_surge_heave_pitch(self, config):
        response = hydro.default_truth_wave_model(config).frf([0.8])[0, :, 0]
        assert np.all(response[[1, 3, 5]] == 0.0)
        assert np.all(np.abs(response[[0, 2, 4]]) > 0.0)


class TestDataset:
    def test_damping_is_symmetric_and_psd(self, frd):
        frd.validate()
        assert frd.omega.size == 200
        assert frd.omega[0] == pytest.approx(0.05) and frd.omega[-1] == pytest.approx(3.0)

    def test_radiation_frf_reproduces_the_truth(self, config, frd):
        truth = hydro.default_truth_radiation_model(config).frf(frd.omega)
        np.testing.assert_allclose(frd.radiation_frf(), truth, rtol=1e-9, atol=1e-6)

    def test_wave_coefficients_carry_the_shift(self, config, frd):
        truth = hydro.default_truth_wave_model(config).frf(frd.omega)[:, :, 0]
        shift = float(config.section('truth_wave')['shift'])
        np.testing.assert_allclose(frd.x_omega * np.exp(-1j * frd.omega * shift)[:, None], truth, rtol=1e-9, atol=1e-6)

    def test_asymmetric_damping_is_rejected(self, frd):
        b_omega = frd.b_omega.copy()
        b_omega[:, 0, 4] += 1e3 * np.abs(b_omega).max()
        broken = hydro.HydroFrd(frd.omega, frd.a_inf, frd.a_omega, b_omega, frd.x_omega)
        with pytest.raises(ce.ValidationError):
            broken.validate()

    def test_save_and_load(self, frd, tmp_path):
        hydro.save_hydro_dataset(frd, tmp_path)
        header = (tmp_path / 'frd.csv').read_text().splitlines()[0].split(',')
        assert len(header) == 85 and header[0] == 'omega'
        loaded = hydro.load_hydro_dataset(tmp_path)
        np.testing.assert_array_equal(loaded.x_omega, frd.x_omega)
        np.testing.assert_array_equal(loaded.a_inf, frd.a_inf)

    def test_missing_dataset(self, tmp_path):
        with pytest.raises(ce.ConfigurationError, match='does not exist'):
            hydro.load_hydro_dataset(tmp_path / 'nowhere')
