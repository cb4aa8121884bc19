"""
Single-model and alternating dual-model reverse sampling.

Every trajectory owns a generator (substream) derived from the plan seed and
its row index: x_T is drawn first, then one noise vector per ancestral step
with t > 1. Single and dual sampling consume the same streams, so alternating
two identical models reproduces the single-model output bit for bit.
"""

from typing import Any, List, Literal, Optional, Sequence

import numpy as np
from aws_lambda_powertools import Logger
from pydantic import BaseModel, ConfigDict, Field

from src.models.diffusion.process import (
    NoisePredictor,
    RandomSource,
    ancestral_step,
    ddim_transfer,
    draw_normal,
)
from src.models.diffusion.schedule import NoiseSchedule
from src.shared.utils import substream_rngs

logger = Logger(service='sampler')


class SamplerPlan(BaseModel):
    """
    What to sample and how.

    Args:
        mode (str): 'single' or 'dual'
        step_kind (str): 'ancestral' (DDPM) or 'deterministic' (DDIM)
        start_parity (str): 'A-first' or 'B-first', the model acting at the first step
        block_size (int): Consecutive steps each model takes before handing over
        n_samples (int): Trajectories to run
        seed (int): Base seed of the per-trajectory substreams
        inference_steps (Optional[int]): Strided DDIM sub-sequence length
            (deterministic only); None runs every timestep
    """

    model_config = ConfigDict(extra='forbid', frozen=True)

    mode: Literal['single', 'dual'] = 'single'
    step_kind: Literal['ancestral', 'deterministic'] = 'ancestral'
    start_parity: Literal['A-first', 'B-first'] = 'A-first'
    block_size: int = Field(default=1, ge=1)
    n_samples: int = Field(default=1000, ge=1)
    seed: int = 0
    inference_steps: Optional[int] = Field(default=None, ge=1)


def timestep_sequence(T: int, step_kind: str, inference_steps: Optional[int] = None) -> List[int]:
    """
    Timesteps visited from T down to 1.

    Raises:
        ValueError: For a strided sequence with ancestral steps or more steps than T
    """
    if inference_steps is None or inference_steps == T:
        return list(range(T, 0, -1))
    if step_kind != 'deterministic':
        raise ValueError('inference_steps below T requires the deterministic step kind')
    if inference_steps > T:
        raise ValueError(f'inference_steps ({inference_steps}) exceeds T ({T})')
    if inference_steps == 1:
        return [T]
    grid = np.unique(np.round(np.linspace(1, T, inference_steps)).astype(int))
    return [int(t) for t in grid[::-1]]


def _input_dim(model: NoisePredictor, dim: Optional[int]) -> int:
    if dim is not None:
        return int(dim)
    arch = getattr(model, 'arch', None)
    if arch is None:
        raise ValueError('Sample dimension unknown: pass dim for models without an arch')
    return int(arch.input_dim)


class TrajectorySampler:
    """
    Runs the reverse chain for a batch of trajectories with one or two models.

    The acting model at step k (k = 0 at t = T) is A when (k // block_size) is
    even under 'A-first', and B otherwise.
    """

    def __init__(self, sched: NoiseSchedule, plan: SamplerPlan):
        self.sched = sched
        self.plan = plan
        self.timesteps = timestep_sequence(sched.T, plan.step_kind, plan.inference_steps)
        self.ensamble = {
            'status': 'pending',
            'status_reason': '',
            'stats': {'model_steps': [0, 0], 'timesteps': len(self.timesteps)},
        }

    def acting_model(self, step_index: int) -> int:
        """0 for model A, 1 for model B."""
        block = (step_index // self.plan.block_size) % 2
        return block if self.plan.start_parity == 'A-first' else 1 - block

    def run(
        self,
        models: Sequence[NoisePredictor],
        rng: Optional[RandomSource] = None,
        cond: Optional[Any] = None,
        dim: Optional[int] = None,
    ) -> np.ndarray:
        """
        Sample plan.n_samples points.

        Args:
            models: One model (single mode) or two models A, B (dual mode)
            rng: Generator or one generator per trajectory; defaults to the
                substreams of plan.seed
            cond: Condition token, scalar or one per trajectory
            dim: Data dimension for models without an arch

        Returns:
            np.ndarray: (n_samples, d) batch of x_0
        """
        n = self.plan.n_samples
        d = _input_dim(models[0], dim)
        if rng is None:
            rng = substream_rngs(self.plan.seed, n)
        counts = self.ensamble['stats']['model_steps']

        x = draw_normal(rng, (n, d))
        for k, t in enumerate(self.timesteps):
            which = self.acting_model(k) if len(models) == 2 else 0
            model = models[which]
            counts[which] += 1
            if self.plan.step_kind == 'ancestral':
                x = ancestral_step(model, x, t, self.sched, rng, cond)
            else:
                t_next = self.timesteps[k + 1] if k + 1 < len(self.timesteps) else 0
                x = ddim_transfer(model, x, t, t_next, self.sched, cond)

        if not np.all(np.isfinite(x)):
            raise FloatingPointError('Sampler produced non-finite values')
        self.ensamble['status'] = 'completed'
        logger.info(
            f'Sampled {n} x {d} ({self.plan.mode}, {self.plan.step_kind}, '
            f'{len(self.timesteps)} steps, model steps {counts})'
        )
        return x


def single_sample(
    model: NoisePredictor,
    sched: NoiseSchedule,
    plan: SamplerPlan,
    rng: Optional[RandomSource] = None,
    cond: Optional[Any] = None,
    dim: Optional[int] = None,
) -> np.ndarray:
    """
    Reverse chain with one model.

    Raises:
        ValueError: If plan.mode is not 'single'
    """
    if plan.mode != 'single':
        raise ValueError(f"single_sample needs plan.mode='single', got '{plan.mode}'")
    return TrajectorySampler(sched, plan).run([model], rng, cond, dim)


def dual_sample(
    model_a: NoisePredictor,
    model_b: NoisePredictor,
    sched: NoiseSchedule,
    plan: SamplerPlan,
    rng: Optional[RandomSource] = None,
    cond: Optional[Any] = None,
    dim: Optional[int] = None,
) -> np.ndarray:
    """
    Reverse chain alternating model A and model B per step (or per block).

    Both models receive the same condition token.

    Raises:
        ValueError: If plan.mode is not 'dual' or the models disagree on input_dim
    """
    if plan.mode != 'dual':
        raise ValueError(f"dual_sample needs plan.mode='dual', got '{plan.mode}'")
    arch_a, arch_b = getattr(model_a, 'arch', None), getattr(model_b, 'arch', None)
    if arch_a is not None and arch_b is not None and arch_a.input_dim != arch_b.input_dim:
        raise ValueError(
            f'Model input dims differ: A={arch_a.input_dim}, B={arch_b.input_dim}'
        )
    return TrajectorySampler(sched, plan).run([model_a, model_b], rng, cond, dim)


def sample_per_condition(
    models: Sequence[NoisePredictor],
    sched: NoiseSchedule,
    plan: SamplerPlan,
    tokens: Sequence[int],
    n_per_condition: int,
) -> tuple:
    """
    Generate n_per_condition samples for every token.

    Returns:
        (samples, token per row)
    """
    if n_per_condition < 1:
        raise ValueError(f'n_per_condition must be >= 1, got {n_per_condition}')
    cond = np.repeat(np.asarray(tokens, dtype=np.int64), n_per_condition)
    sized = plan.model_copy(update={'n_samples': int(len(cond))})
    if plan.mode == 'dual':
        samples = dual_sample(models[0], models[1], sched, sized, cond=cond)
    else:
        samples = single_sample(models[0], sched, sized, cond=cond)
    return samples, cond
