from typing import Sequence, Tuple

import numpy as np
from aws_lambda_powertools import Logger

from src.models.denoiser.network import is_conditional
from src.models.diffusion.process import NoisePredictor, diffuse_batch
from src.models.diffusion.schedule import NoiseSchedule
from src.models.training.splits import LabeledSample, canonical_tokens, stack_x0

logger = Logger(service='generalization-gap')


def _per_sample_error(
    model: NoisePredictor,
    samples: Sequence[LabeledSample],
    sched: NoiseSchedule,
    n_mc: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Mean over n_mc draws of ||eps_theta(x_t, t, c) - eps|| for every sample."""
    x0 = stack_x0(samples)
    n, d = x0.shape
    t = rng.integers(1, sched.T + 1, size=n * n_mc)
    eps = rng.standard_normal((n * n_mc, d))
    x_t = diffuse_batch(np.repeat(x0, n_mc, axis=0), t, eps, sched)
    cond = None
    if is_conditional(model):
        tokens = canonical_tokens(samples)
        cond = None if tokens is None else np.repeat(tokens, n_mc)
    pred = np.asarray(model.predict(x_t, t, cond), dtype=np.float64)
    errors = np.linalg.norm(pred - eps, axis=1)
    return errors.reshape(n, n_mc).mean(axis=1)


def generalization_gap_estimate(
    model: NoisePredictor,
    members: Sequence[LabeledSample],
    nonmembers: Sequence[LabeledSample],
    sched: NoiseSchedule,
    n_mc: int,
    rng: np.random.Generator,
) -> Tuple[float, float]:
    """
    Monte-Carlo train/test gap of the denoising error, with its standard error.

    The gap is E||eps_theta(x_t^member, t) - eps|| minus the same expectation
    over non-members. Negative values mean members are fit better.

    Returns:
        (gap, standard error), the error taken over per-sample means

    Raises:
        ValueError: If n_mc < 1 or either set is empty
    """
    if n_mc < 1:
        raise ValueError(f'n_mc must be >= 1, got {n_mc}')
    if not members or not nonmembers:
        raise ValueError('Both member and non-member sets must be nonempty')

    member_err = _per_sample_error(model, members, sched, n_mc, rng)
    nonmember_err = _per_sample_error(model, nonmembers, sched, n_mc, rng)
    gap = float(member_err.mean() - nonmember_err.mean())

    variance = 0.0
    for errors in (member_err, nonmember_err):
        if len(errors) > 1:
            variance += float(errors.var(ddof=1)) / len(errors)
    stderr = float(np.sqrt(variance))
    logger.debug(f'Generalization gap {gap:.6f} +/- {stderr:.6f}')
    return gap, stderr


def generalization_gap(
    model: NoisePredictor,
    members: Sequence[LabeledSample],
    nonmembers: Sequence[LabeledSample],
    sched: NoiseSchedule,
    n_mc: int,
    rng: np.random.Generator,
) -> float:
    return generalization_gap_estimate(model, members, nonmembers, sched, n_mc, rng)[0]
