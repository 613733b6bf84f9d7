import numpy as np
import pytest

import custom_errors as ce
import state_space as ss
import sysid


@pytest.fixture
def second_order() -> ss.StateSpaceModel:
    return ss.StateSpaceModel(
        a=[[0.9, 0.2], [-0.2, 0.9]], b=[[1.0], [0.5]], c=[[0.3, -0.7]], d=[[0.1]], dt=0.1,
    )


def markov_kernel(model: ss.StateSpaceModel, count: int = 200) -> sysid.ImpulseResponse:
    return sysid.ImpulseResponse(dt=model.dt, h=model.markov_parameters(count))


class TestKernels:
    def test_non_uniform_grid(self):
        omega = np.array([0.1, 0.2, 0.4, 0.5])
        with pytest.raises(ce.ConfigurationError, match='uniform'):
            sysid.impulse_response_from_frd(np.ones((4, 1, 1)), omega, 0.1)

    def test_sample_step_too_coarse(self, frd):
        with pytest.raises(ce.ConfigurationError, match='Nyquist'):
            sysid.impulse_response_from_frd(frd.radiation_frf(), frd.omega, 2.0)

    def test_unknown_kind(self, frd):
        with pytest.raises(ce.ConfigurationError):
            sysid.impulse_response_from_frd(frd.x_omega, frd.omega, 0.1, kind='diffraction')

    def test_radiation_kernel_decays(self, frd):
        kernel = sysid.impulse_response_from_frd(frd.radiation_frf()[:, :1, :1], frd.omega, 0.1)
        h = kernel.causal()[:, 0, 0]
        assert np.max(np.abs(h[-50:])) < 0.05 * np.max(np.abs(h))

    def test_invalid_samples(self):
        with pytest.raises(ce.ValidationError):
            sysid.ImpulseResponse(dt=0.1, h=np.array([1.0, np.nan, 0.0]))


class TestCausalization:
    @pytest.fixture(scope='class')
    def wave_kernel(self, frd):
        return sysid.impulse_response_from_frd(frd.x_omega, frd.omega, 0.1, kind='wave', lead=10.0)

    def test_unshifted_kernel_is_acausal(self, wave_kernel):
        assert wave_kernel.pre_zero_ratio() >= sysid.CAUSALITY_LIMIT

    def test_scan_finds_a_shift(self, wave_kernel):
        ratios, best = sysid.scan_causalization_shift(wave_kernel, range(1, 9))
        assert ratios[4.0] < sysid.CAUSALITY_LIMIT
        assert best is not None and best <= 4.0

    def test_shift_moves_the_time_axis(self, wave_kernel):
        shifted = sysid.causalize(wave_kernel, 4.0)
        np.testing.assert_allclose(shifted.times, wave_kernel.times + 4.0)
        assert shifted.t_shift == pytest.approx(4.0)

    @pytest.mark.parametrize('t_d', [-1.0, 0.05])
    def test_invalid_shift(self, wave_kernel, t_d):
        with pytest.raises(ce.ConfigurationError):
            sysid.causalize(wave_kernel, t_d)


class TestEra:
    def test_recovers_a_known_model(self, second_order):
        model, report = sysid.fit_state_space_era(markov_kernel(second_order), 2)
        omega = np.linspace(0.1, 3.0, 30)
        np.testing.assert_allclose(model.frf(omega), second_order.frf(omega), rtol=1e-6, atol=1e-9)
        assert report.stable and not report.flags

    def test_order_is_reduced_to_the_rank(self, second_order):
        model, report = sysid.fit_state_space_era(markov_kernel(second_order), 5)
        assert model.n == 2 and 'order_reduced' in report.flags

    def test_zero_response(self):
        model, report = sysid.fit_state_space_era(sysid.ImpulseResponse(dt=0.1, h=np.zeros(100)), 4)
        assert report.flags == ('zero_model',)
        assert np.all(model.frf([0.5]) == 0.0)

    def test_too_few_samples(self, second_order):
        with pytest.raises(ce.ConfigurationError):
            sysid.fit_state_space_era(markov_kernel(second_order, 10), 6)

    def test_invalid_order(self, second_order):
        with pytest.raises(ce.ConfigurationError):
            sysid.fit_state_space_era(markov_kernel(second_order), 0)


class TestPem:
    def test_perturbed_model_is_refined(self, second_order):
        perturbed = ss.StateSpaceModel(a=1.02 * second_order.a, b=second_order.b, c=second_order.c,
                                       d=second_order.d, dt=0.1)
        assert perturbed.is_stable()
        refined, report = sysid.pem_refine(perturbed, markov_kernel(second_order))
        assert report.cost <= 0.1 * report.initial_cost
        assert refined.is_stable()

    def test_input_output_data(self, second_order, rng):
        u = rng.normal(size=(300, 1))
        data = sysid.IOData(u=u, y=second_order.simulate(u), dt=0.1)
        perturbed = ss.StateSpaceModel(a=0.98 * second_order.a, b=second_order.b, c=second_order.c,
                                       d=second_order.d, dt=0.1)
        _, report = sysid.pem_refine(perturbed, data)
        assert report.cost < report.initial_cost

    def test_zero_data(self, second_order):
        model, report = sysid.pem_refine(second_order, sysid.ImpulseResponse(dt=0.1, h=np.zeros(50)))
        assert model is second_order and report.flags == ('zero_data',)

    def test_sample_step_mismatch(self, second_order):
        with pytest.raises(ce.ConfigurationError):
            sysid.pem_refine(second_order, sysid.ImpulseResponse(dt=0.2, h=np.ones(50)))

    def test_unstable_initial_model(self):
        unstable = ss.StateSpaceModel(a=[[1.1]], b=[[1.0]], c=[[1.0]], d=[[0.0]], dt=0.1)
        with pytest.raises(ce.ValidationError):
            sysid.pem_refine(unstable, sysid.ImpulseResponse(dt=0.1, h=np.ones(50)))


class TestForceModels:
    def test_radiation_model_meets_the_band_target(self, radiation_fit):
        model, report = radiation_fit
        assert model.is_stable() and report.stable
        assert (model.m, model.p) == (3, 3)
        assert max(report.hinf_band) <= 0.05
        assert model.input_labels == ('surge_velocity', 'heave_velocity', 'pitch_velocity')

    def test_wave_model_meets_the_band_target(self, wave_fit):
        model, report = wave_fit
        assert model.is_stable()
        assert (model.m, model.p) == (1, 3)
        assert max(report.hinf_band) <= 0.08
        assert model.output_labels == ('surge_wave', 'heave_wave', 'pitch_wave')

    def test_wave_model_is_strictly_proper(self, wave_fit):
        model = wave_fit[0]
        assert np.all(model.d == 0.0)
        assert np.any(model.markov_parameters(4)[1:] != 0.0)

    def test_insufficient_shift_is_reported(self, frd):
        with pytest.raises(ce.ConfigurationError, match='larger shift'):
            sysid.fit_wave_force_model(frd, 8, 0.0)

    def test_unknown_dof(self, frd):
        with pytest.raises(ce.ConfigurationError):
            sysid.fit_radiation_model(frd, 6, dofs=('surge', 'spin'))

    def test_report_text(self, radiation_fit):
        text = radiation_fit[1].as_text()
        assert text.startswith(f'order={radiation_fit[0].n}\n') and 'hinf_band=' in text
