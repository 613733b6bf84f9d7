import math

import numpy as np
import pytest

import custom_errors as ce
import state_space as ss


class TestConstruction:
    def test_shapes_are_normalised(self):
        model = ss.StateSpaceModel(a=[[0.5]], b=[1.0], c=[2.0], d=0.0, dt=0.1)
        assert (model.n, model.m, model.p) == (1, 1, 1)
        assert model.b.shape == (1, 1) and model.c.shape == (1, 1) and model.d.shape == (1, 1)

    def test_inconsistent_dimensions_are_rejected(self):
        with pytest.raises(ce.ValidationError):
            ss.StateSpaceModel(a=np.eye(2), b=np.ones((3, 1)), c=np.ones((1, 2)), d=[[0.0]])

    def test_label_count_must_match(self):
        with pytest.raises(ce.ValidationError):
            ss.StateSpaceModel(a=[[0.0]], b=[[1.0]], c=[[1.0]], d=[[0.0]], input_labels=('u1', 'u2'))

    def test_non_positive_sample_time_is_rejected(self):
        with pytest.raises(ce.ValidationError):
            ss.StateSpaceModel(a=[[0.0]], b=[[1.0]], c=[[1.0]], d=[[0.0]], dt=0.0)


class TestDiscretize:
    def test_integrator(self):
        b = np.array([[1.0, 2.0], [3.0, 4.0]])
        model = ss.StateSpaceModel(a=np.zeros((2, 2)), b=b, c=np.eye(2), d=np.zeros((2, 2))).discretize(0.1)
        np.testing.assert_allclose(model.a, np.eye(2), atol=1e-15)
        np.testing.assert_allclose(model.b, 0.1 * b, rtol=1e-12)
        assert model.dt == 0.1

    def test_first_order_lag(self):
        model = ss.StateSpaceModel(a=[[-1.0]], b=[[1.0]], c=[[1.0]], d=[[0.0]]).discretize(0.1)
        assert model.a[0, 0] == pytest.approx(math.exp(-0.1), rel=1e-14)
        assert model.b[0, 0] == pytest.approx(1.0 - math.exp(-0.1), rel=1e-12)

    def test_discrete_model_cannot_be_discretised_again(self):
        model = ss.StateSpaceModel(a=[[0.5]], b=[[1.0]], c=[[1.0]], d=[[0.0]], dt=0.1)
        with pytest.raises(ce.ValidationError):
            model.discretize(0.1)


class TestFrequencyResponse:
    def test_band_pass_peak(self):
        gain, omega, zeta = 3.0, 1.2, 0.1
        response = ss.second_order_section(gain, omega, zeta).frf([omega])
        assert response[0, 0, 0] == pytest.approx(gain / (2.0 * zeta * omega), rel=1e-12)

    def test_discrete_matches_continuous_at_low_frequency(self):
        continuous = ss.StateSpaceModel(a=[[-0.5]], b=[[1.0]], c=[[1.0]], d=[[0.0]])
        discrete = continuous.discretize(0.01)
        np.testing.assert_allclose(discrete.frf([0.05]), continuous.frf([0.05]), rtol=1e-2)

    def test_nyquist_limit(self):
        model = ss.StateSpaceModel(a=[[0.5]], b=[[1.0]], c=[[1.0]], d=[[0.0]], dt=0.1)
        with pytest.raises(ce.DomainError):
            model.frf([math.pi / 0.1])


class TestSimulation:
    def test_impulse_response_equals_markov_parameters(self, rng):
        model = ss.StateSpaceModel(
            a=np.diag([0.9, -0.5, 0.3]), b=rng.normal(size=(3, 2)), c=rng.normal(size=(2, 3)),
            d=rng.normal(size=(2, 2)), dt=0.1,
        )
        impulse = np.zeros((6, 2))
        impulse[0, 1] = 1.0
        np.testing.assert_allclose(model.simulate(impulse), model.markov_parameters(6)[:, :, 1], atol=1e-14)

    def test_continuous_model_cannot_be_stepped(self):
        with pytest.raises(ce.ValidationError):
            ss.StateSpaceModel(a=[[-1.0]], b=[[1.0]], c=[[1.0]], d=[[0.0]]).simulate(np.zeros((3, 1)))

    def test_stability(self):
        assert ss.StateSpaceModel(a=[[0.999]], b=[[1.0]], c=[[1.0]], d=[[0.0]], dt=0.1).is_stable()
        assert not ss.StateSpaceModel(a=[[1.0]], b=[[1.0]], c=[[1.0]], d=[[0.0]], dt=0.1).is_stable()
        assert not ss.StateSpaceModel(a=[[0.0]], b=[[1.0]], c=[[1.0]], d=[[0.0]]).is_stable()


class TestComposition:
    def test_series_response_is_the_product(self):
        first = ss.second_order_section(1.0, 1.0, 0.3)
        second = ss.StateSpaceModel(a=[[-2.0]], b=[[1.0]], c=[[2.0]], d=[[0.5]])
        omega = np.array([0.3, 1.0, 2.5])
        expected = second.frf(omega)[:, 0, 0] * first.frf(omega)[:, 0, 0]
        np.testing.assert_allclose(ss.series(first, second).frf(omega)[:, 0, 0], expected, rtol=1e-12)

    def test_block_diagonal_keeps_channels_apart(self):
        first, second = ss.second_order_section(1.0, 1.0, 0.3), ss.second_order_section(2.0, 0.5, 0.2)
        response = ss.block_diagonal([first, second]).frf([0.7])[0]
        assert response[0, 1] == 0.0 and response[1, 0] == 0.0
        assert response[1, 1] == pytest.approx(second.frf([0.7])[0, 0, 0])
