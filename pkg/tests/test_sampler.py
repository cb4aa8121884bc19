"""
Test cases for single-model and alternating dual-model sampling.
"""

import os
import sys

import numpy as np
import pytest

# Add src directory to the path for imports
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../src')))

from src.models.denoiser.network import DenoiserArch, copy_denoiser, init_denoiser
from src.models.diffusion.schedule import make_linear_schedule
from src.models.sampling.sampler import (
    SamplerPlan,
    TrajectorySampler,
    dual_sample,
    sample_per_condition,
    single_sample,
    timestep_sequence,
)
from tests.stubs import ConstantPredictor


# Fixtures
@pytest.fixture
def sched():
    return make_linear_schedule(100, 1e-4, 0.05)


@pytest.fixture
def arch():
    return DenoiserArch(input_dim=2, hidden=(16,), embed_dim=4, T=100)


@pytest.fixture
def models(arch):
    """Two distinct random models."""
    return init_denoiser(arch, 1), init_denoiser(arch, 2)


class TestTimestepSequence:
    def test_full_sequence(self):
        """Test T down to 1."""
        assert timestep_sequence(5, 'ancestral') == [5, 4, 3, 2, 1]

    def test_strided_deterministic(self):
        """Test 50 of 100 timesteps, descending from T to 1."""
        steps = timestep_sequence(100, 'deterministic', 50)

        assert len(steps) == 50
        assert steps[0] == 100 and steps[-1] == 1
        assert all(a > b for a, b in zip(steps, steps[1:]))

    def test_strided_ancestral_rejected(self):
        """Test that skipping timesteps needs deterministic steps."""
        with pytest.raises(ValueError, match='deterministic'):
            timestep_sequence(100, 'ancestral', 50)

    def test_too_many_steps(self):
        """Test inference_steps <= T."""
        with pytest.raises(ValueError, match='exceeds'):
            timestep_sequence(10, 'deterministic', 11)


class TestSingleSample:
    def test_fixed_seed_identical(self, sched, models):
        """Test that the same plan seed gives the same batch."""
        plan = SamplerPlan(n_samples=8, seed=3)

        first = single_sample(models[0], sched, plan)
        second = single_sample(models[0], sched, plan)

        assert first.shape == (8, 2)
        np.testing.assert_array_equal(first, second)

    def test_trajectories_independent_of_batch_size(self, sched, models):
        """Test that trajectory i depends only on (seed, i)."""
        small = single_sample(models[0], sched, SamplerPlan(n_samples=3, seed=4))
        large = single_sample(models[0], sched, SamplerPlan(n_samples=6, seed=4))

        np.testing.assert_allclose(small, large[:3], rtol=1e-9, atol=1e-9)

    def test_single_step_schedule(self):
        """Test that T = 1 runs exactly one model step."""
        sched = make_linear_schedule(1, 0.1, 0.1)
        model = ConstantPredictor([0.0, 0.0])

        single_sample(model, sched, SamplerPlan(n_samples=4), dim=2)

        assert model.calls == 1

    def test_strided_deterministic_steps(self, sched, models):
        """Test that strided DDIM sampling runs one model step per visited timestep."""
        plan = SamplerPlan(n_samples=5, step_kind='deterministic', inference_steps=20, seed=2)

        sampler = TrajectorySampler(sched, plan)
        out = sampler.run([models[0]])

        assert sampler.ensamble['stats']['model_steps'] == [20, 0]
        np.testing.assert_array_equal(out, single_sample(models[0], sched, plan))

    def test_mode_checked(self, sched, models):
        """Test that single_sample refuses a dual plan."""
        with pytest.raises(ValueError, match="mode='single'"):
            single_sample(models[0], sched, SamplerPlan(mode='dual'))

    def test_unknown_dimension(self, sched):
        """Test that plain predictors need an explicit dim."""
        with pytest.raises(ValueError, match='dim'):
            single_sample(ConstantPredictor([0.0]), sched, SamplerPlan(n_samples=2))


class TestDualSample:
    @pytest.mark.parametrize('step_kind', ['ancestral', 'deterministic'])
    def test_identical_models_match_single(self, sched, models, step_kind):
        """Test bit-identical output when both models are the same."""
        twin = copy_denoiser(models[0])
        dual = SamplerPlan(mode='dual', step_kind=step_kind, n_samples=6, seed=9)
        single = dual.model_copy(update={'mode': 'single'})

        np.testing.assert_array_equal(
            dual_sample(models[0], twin, sched, dual), single_sample(models[0], sched, single)
        )

    def test_each_model_takes_half_the_steps(self, sched, models):
        """Test 50 steps per model at T = 100."""
        sampler = TrajectorySampler(sched, SamplerPlan(mode='dual', n_samples=2))

        sampler.run(list(models))

        assert sampler.ensamble['stats']['model_steps'] == [50, 50]

    def test_start_parity_matters(self, sched, models):
        """Test that A-first and B-first differ for distinct models."""
        a_first = SamplerPlan(mode='dual', n_samples=4, seed=1)
        b_first = a_first.model_copy(update={'start_parity': 'B-first'})

        assert not np.array_equal(
            dual_sample(*models, sched, a_first), dual_sample(*models, sched, b_first)
        )

    def test_block_schedule(self, sched):
        """Test the acting model per step for blocks of 3."""
        sampler = TrajectorySampler(sched, SamplerPlan(mode='dual', block_size=3, start_parity='B-first'))

        assert [sampler.acting_model(k) for k in range(7)] == [1, 1, 1, 0, 0, 0, 1]

    def test_dim_mismatch(self, sched, models):
        """Test that both models must share the input dim."""
        other = init_denoiser(DenoiserArch(input_dim=3, hidden=(4,), embed_dim=4, T=100), 0)

        with pytest.raises(ValueError, match='input dims differ'):
            dual_sample(models[0], other, sched, SamplerPlan(mode='dual'))


class TestConditionalSampling:
    def test_per_condition_batches(self, sched):
        """Test n_per_condition samples per token with the token recorded per row."""
        arch = DenoiserArch(input_dim=2, hidden=(8,), embed_dim=4, T=100, n_tokens=4)
        model = init_denoiser(arch, 0)
        plan = SamplerPlan(step_kind='deterministic', inference_steps=10, seed=5)

        samples, cond = sample_per_condition([model], sched, plan, [0, 2], 3)

        assert samples.shape == (6, 2)
        assert cond.tolist() == [0, 0, 0, 2, 2, 2]
