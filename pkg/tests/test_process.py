"""
Test cases for the forward process, ancestral steps and the deterministic DDIM maps.
"""

import math
import os
import sys

import numpy as np
import pytest

# Add src directory to the path for imports
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../src')))

from src.models.denoiser.network import DenoiserArch, init_denoiser
from src.models.diffusion.process import (
    ancestral_step,
    compose_denoise,
    compose_reverse,
    ddim_denoise_step,
    ddim_reverse_step,
    ddim_transfer,
    diffuse,
    draw_normal,
    posterior_mean,
    predict_noise_from_x0,
    predict_x0,
    step_plan,
)
from src.models.diffusion.schedule import NoiseSchedule, make_linear_schedule
from tests.stubs import ConstantPredictor


def schedule_from_betas(betas):
    betas = np.asarray(betas, dtype=np.float64)
    alphas = 1.0 - betas
    return NoiseSchedule(
        T=len(betas), betas=betas, alphas=alphas, alpha_bars=np.cumprod(alphas)
    )


# Fixtures
@pytest.fixture
def sched():
    """Toy schedule with T = 20."""
    return make_linear_schedule(20, 1e-3, 0.2)


@pytest.fixture
def quarter_sched():
    """Two-step schedule with alpha_2 = 0.96 and alpha_bar_2 = 0.25."""
    alpha_1 = 0.25 / 0.96
    return schedule_from_betas([1.0 - alpha_1, 0.04])


@pytest.fixture
def tiny_model():
    """Random 2-d denoiser matching the toy schedule."""
    arch = DenoiserArch(input_dim=2, hidden=(3,), embed_dim=4, T=20)
    return init_denoiser(arch, seed=11)


class TestDiffuse:
    def test_zero_noise(self, sched):
        """Test that eps = 0 returns sqrt(alpha_bar_t) * x0 exactly."""
        x0 = np.array([0.3, -1.2])

        out = diffuse(x0, 5, np.zeros(2), sched)

        np.testing.assert_array_equal(out, np.sqrt(sched.alpha_bar(5)) * x0)

    def test_hand_computed_value(self, quarter_sched):
        """Test alpha_bar = 0.25, x0 = 1, eps = 1 -> 0.5 + sqrt(0.75)."""
        out = diffuse(np.array([1.0]), 2, np.array([1.0]), quarter_sched)

        assert out[0] == pytest.approx(0.5 + math.sqrt(0.75))
        assert out[0] == pytest.approx(1.36603, abs=1e-5)

    def test_long_schedule_tends_to_noise(self):
        """Test that at t = T of a long schedule the output is close to eps."""
        sched = make_linear_schedule(1000, 1e-4, 0.02)
        x0, eps = np.array([1.0, -1.0]), np.array([0.2, 0.4])

        out = diffuse(x0, 1000, eps, sched)

        assert np.linalg.norm(out - eps) <= np.sqrt(sched.alpha_bar(1000)) * np.linalg.norm(x0) + 1e-4

    def test_shape_mismatch(self, sched):
        """Test that x0 and eps must share a shape."""
        with pytest.raises(ValueError, match='Shape mismatch'):
            diffuse(np.zeros(2), 3, np.zeros(3), sched)

    def test_timestep_out_of_range(self, sched):
        """Test that t outside [1, T] is rejected."""
        with pytest.raises(ValueError, match='out of range'):
            diffuse(np.zeros(2), 21, np.zeros(2), sched)


class TestPosteriorMean:
    def test_zero_prediction(self, sched):
        """Test eps_pred = 0 -> x_t / sqrt(alpha_t)."""
        x_t = np.array([0.5, 2.0])

        out = posterior_mean(x_t, 4, np.zeros(2), sched)

        np.testing.assert_allclose(out, x_t / np.sqrt(sched.alpha(4)))

    def test_hand_computed_value(self, quarter_sched):
        """Test alpha = 0.96, alpha_bar = 0.25, x_t = 1, eps = 0.5."""
        out = posterior_mean(np.array([1.0]), 2, np.array([0.5]), quarter_sched)

        assert out[0] == pytest.approx(0.99705, abs=1e-5)

    def test_alpha_bar_one_rejected(self):
        """Test that a degenerate step with alpha_bar = 1 is refused."""
        with pytest.raises(ValueError, match='alpha_bar'):
            posterior_mean(np.zeros(1), 1, np.zeros(1), schedule_from_betas([0.0]))


class TestAncestralStep:
    def test_last_step_is_posterior_mean(self, sched):
        """Test that t = 1 adds no noise."""
        model = ConstantPredictor([0.1, -0.2])
        x_t = np.array([0.4, 0.9])

        out = ancestral_step(model, x_t, 1, sched, np.random.default_rng(0))

        np.testing.assert_array_equal(out, posterior_mean(x_t, 1, model.predict(x_t, 1), sched))

    def test_fixed_seed_is_bit_identical(self, sched, tiny_model):
        """Test determinism for equal seeds."""
        x_t = np.array([[0.4, 0.9], [-1.0, 0.2]])

        first = ancestral_step(tiny_model, x_t, 7, sched, np.random.default_rng(3))
        second = ancestral_step(tiny_model, x_t, 7, sched, np.random.default_rng(3))

        np.testing.assert_array_equal(first, second)

    def test_noise_variance_is_beta(self, sched):
        """Test that the added noise has variance beta_t (10k draws, 5%)."""
        model = ConstantPredictor([0.0])
        x_t = np.zeros((10000, 1))
        t = 10

        out = ancestral_step(model, x_t, t, sched, np.random.default_rng(123))

        assert np.var(out[:, 0]) == pytest.approx(sched.beta(t), rel=0.05)

    def test_substreams_per_row(self, sched):
        """Test that row i only consumes substream i."""
        model = ConstantPredictor([0.0, 0.0])
        x_t = np.zeros((3, 2))
        rngs = [np.random.default_rng([5, i]) for i in range(3)]

        out = ancestral_step(model, x_t, 6, sched, rngs)
        alone = ancestral_step(model, x_t[1], 6, sched, [np.random.default_rng([5, 1])])

        np.testing.assert_array_equal(out[1], alone)


class TestDrawNormal:
    def test_substream_count_must_match_rows(self):
        """Test that the number of substreams must equal the batch size."""
        with pytest.raises(ValueError, match='substreams'):
            draw_normal([np.random.default_rng(0)], (2, 3))


class TestPredictX0:
    def test_inverts_diffuse(self, sched):
        """Test f_theta with the true noise recovers x0."""
        rng = np.random.default_rng(0)
        x0, eps = rng.standard_normal((5, 2)), rng.standard_normal((5, 2))

        for t in (1, 10, 20):
            x_t = diffuse(x0, t, eps, sched)
            np.testing.assert_allclose(predict_x0(x_t, t, eps, sched), x0, atol=1e-10)

    def test_zero_prediction(self, sched):
        """Test eps_pred = 0 -> x_t / sqrt(alpha_bar_t)."""
        x_t = np.array([0.3, 0.6])

        np.testing.assert_allclose(
            predict_x0(x_t, 8, np.zeros(2), sched), x_t / np.sqrt(sched.alpha_bar(8))
        )

    def test_hand_computed_value(self, quarter_sched):
        """Test the inverse of the hand-computed diffuse example."""
        out = predict_x0(np.array([0.5 + math.sqrt(0.75)]), 2, np.array([1.0]), quarter_sched)

        assert out[0] == pytest.approx(1.0)

    def test_noise_from_x0_inverts_diffuse(self, sched):
        """Test predict_noise_from_x0 recovers eps."""
        x0, eps = np.array([1.0, 2.0]), np.array([-0.5, 0.25])

        x_t = diffuse(x0, 12, eps, sched)

        np.testing.assert_allclose(predict_noise_from_x0(x_t, 12, x0, sched), eps)


class TestDeterministicSteps:
    def test_constant_predictor_round_trip(self, sched):
        """Test psi(phi(x_t, t), t + 1) == x_t for a constant predictor."""
        model = ConstantPredictor([0.7, -0.3])
        x_t = np.array([0.2, -1.1])

        for t in (1, 9, 19):
            back = ddim_denoise_step(model, ddim_reverse_step(model, x_t, t, sched), t + 1, sched)
            np.testing.assert_allclose(back, x_t, rtol=0, atol=1e-12)

    def test_reverse_step_from_origin(self, sched):
        """Test phi at x_t = 0 against the symbolic expansion."""
        e = np.array([0.5, -2.0])
        t = 6
        abar_t, abar_next = sched.alpha_bar(t), sched.alpha_bar(t + 1)
        expected = (
            np.sqrt(abar_next) * (-np.sqrt(1 - abar_t) / np.sqrt(abar_t)) * e
            + np.sqrt(1 - abar_next) * e
        )

        out = ddim_reverse_step(ConstantPredictor(e), np.zeros(2), t, sched)

        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_zero_predictor_denoise(self, sched):
        """Test psi with eps = 0 scales by sqrt(alpha_bar_{t-1} / alpha_bar_t)."""
        x_t = np.array([1.5, -0.5])

        out = ddim_denoise_step(ConstantPredictor([0.0, 0.0]), x_t, 5, sched)

        np.testing.assert_allclose(out, np.sqrt(sched.alpha_bar(4) / sched.alpha_bar(5)) * x_t)

    def test_denoise_matches_scalar_reimplementation(self, sched, tiny_model):
        """Test psi on a random small network against a step-by-step scalar computation."""
        x_t = np.array([0.3, -0.7])
        t = 5

        out = ddim_denoise_step(tiny_model, x_t, t, sched)

        eps = tiny_model.predict(x_t, t)
        expected = []
        for i in range(2):
            x0_i = (x_t[i] - math.sqrt(1 - sched.alpha_bar(t)) * eps[i]) / math.sqrt(sched.alpha_bar(t))
            expected.append(
                math.sqrt(sched.alpha_bar(t - 1)) * x0_i + math.sqrt(1 - sched.alpha_bar(t - 1)) * eps[i]
            )
        np.testing.assert_allclose(out, expected, atol=1e-6)

    def test_shape_preserved(self, sched, tiny_model):
        """Test that batches keep their shape."""
        x_t = np.zeros((4, 2))

        assert ddim_reverse_step(tiny_model, x_t, 3, sched).shape == (4, 2)
        assert ddim_denoise_step(tiny_model, x_t, 3, sched).shape == (4, 2)

    def test_step_bounds(self, sched):
        """Test phi needs t <= T - 1 and psi needs t >= 2."""
        model = ConstantPredictor([0.0, 0.0])

        with pytest.raises(ValueError):
            ddim_reverse_step(model, np.zeros(2), 20, sched)
        with pytest.raises(ValueError):
            ddim_denoise_step(model, np.zeros(2), 1, sched)

    def test_transfer_to_zero_is_x0_prediction(self, sched, tiny_model):
        """Test that a jump to t = 0 returns f_theta."""
        x_t = np.array([0.1, 0.2])

        out = ddim_transfer(tiny_model, x_t, 7, 0, sched)

        np.testing.assert_allclose(out, predict_x0(x_t, 7, tiny_model.predict(x_t, 7), sched))


class TestCompositions:
    @pytest.mark.parametrize('t_target,stride,calls', [(10, 1, 10), (10, 5, 2), (10, 3, 4), (1, 4, 1)])
    def test_model_evaluations(self, sched, t_target, stride, calls):
        """Test ceil(t_target / stride) model evaluations."""
        model = ConstantPredictor([0.1, 0.1])

        compose_reverse(model, np.zeros(2), t_target, sched, stride)

        assert model.calls == calls

    def test_step_plan_ends_at_target(self):
        """Test the shorter final jump when stride does not divide the target."""
        assert step_plan(10, 3) == [0, 3, 6, 9, 10]
        with pytest.raises(ValueError, match='stride'):
            step_plan(10, 0)

    @pytest.mark.parametrize('stride', [1, 4])
    def test_constant_predictor_composition_round_trip(self, sched, stride):
        """Test Psi(Phi(x0)) == x0 for a constant predictor."""
        model = ConstantPredictor([0.4, -0.9])
        x0 = np.array([1.0, 0.5])

        x_t = compose_reverse(model, x0, 15, sched, stride)
        back = compose_denoise(model, x_t, 15, sched, stride)

        np.testing.assert_allclose(back, x0, atol=1e-10)

    def test_strides_differ_but_are_deterministic(self, sched, tiny_model):
        """Test stride 1 and 5 give different, reproducible results."""
        x0 = np.array([0.8, -0.4])

        fine = compose_reverse(tiny_model, x0, 10, sched, 1)
        coarse = compose_reverse(tiny_model, x0, 10, sched, 5)

        assert not np.allclose(fine, coarse)
        np.testing.assert_array_equal(coarse, compose_reverse(tiny_model, x0, 10, sched, 5))
