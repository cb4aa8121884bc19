"""
Forward diffusion, ancestral DDPM steps and the deterministic DDIM maps.

Every function accepts a single point of shape (d,) or a batch of shape (n, d)
and returns an array of the same shape, computed in float64. Models are used
only through `model.predict(x_t, t, cond)`.
"""

from typing import Any, List, Optional, Protocol, Sequence, Union

import numpy as np

from src.models.diffusion.schedule import NoiseSchedule

RandomSource = Union[np.random.Generator, Sequence[np.random.Generator]]


class NoisePredictor(Protocol):
    """Anything that estimates the noise in x_t at timestep t."""

    def predict(self, x_t: np.ndarray, t: Any, cond: Optional[Any] = None) -> np.ndarray:
        ...


def _as_array(x: np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=np.float64)


def _check_same_shape(a: np.ndarray, b: np.ndarray, names: str) -> None:
    if a.shape != b.shape:
        raise ValueError(f'Shape mismatch between {names}: {a.shape} vs {b.shape}')


def draw_normal(rng: RandomSource, shape: tuple) -> np.ndarray:
    """
    Draw standard normal noise of `shape`.

    A single generator fills the whole array. A sequence of generators is read
    as one stream per row (substreams), so row i only consumes generator i.
    """
    if isinstance(rng, np.random.Generator):
        return rng.standard_normal(shape)
    rngs: List[np.random.Generator] = list(rng)
    if len(shape) == 1:
        if len(rngs) != 1:
            raise ValueError(f'Expected 1 substream for a single point, got {len(rngs)}')
        return rngs[0].standard_normal(shape)
    if len(rngs) != shape[0]:
        raise ValueError(f'Expected {shape[0]} substreams, got {len(rngs)}')
    return np.stack([r.standard_normal(shape[1:]) for r in rngs])


def diffuse(
    x0: np.ndarray, t: int, eps: np.ndarray, sched: NoiseSchedule
) -> np.ndarray:
    """Closed-form forward process: sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps."""
    x0, eps = _as_array(x0), _as_array(eps)
    _check_same_shape(x0, eps, 'x0 and eps')
    t = sched.check_timestep(t)
    abar = sched.alpha_bar(t)
    return np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * eps


def diffuse_batch(
    x0: np.ndarray, t: np.ndarray, eps: np.ndarray, sched: NoiseSchedule
) -> np.ndarray:
    """Forward process for a batch with one timestep per row (training hot path)."""
    x0, eps = _as_array(x0), _as_array(eps)
    _check_same_shape(x0, eps, 'x0 and eps')
    t = np.asarray(t)
    if t.min() < 1 or t.max() > sched.T:
        raise ValueError(f'Timesteps out of range [1, {sched.T}]')
    abar = sched.alpha_bars[t - 1][:, None]
    return np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * eps


def predict_noise_from_x0(
    x_t: np.ndarray, t: int, x0: np.ndarray, sched: NoiseSchedule
) -> np.ndarray:
    """The noise that maps x0 to x_t at step t (inverse of diffuse in eps)."""
    x_t, x0 = _as_array(x_t), _as_array(x0)
    _check_same_shape(x_t, x0, 'x_t and x0')
    t = sched.check_timestep(t)
    abar = sched.alpha_bar(t)
    return (x_t - np.sqrt(abar) * x0) / np.sqrt(1.0 - abar)


def posterior_mean(
    x_t: np.ndarray, t: int, eps_pred: np.ndarray, sched: NoiseSchedule
) -> np.ndarray:
    """Mean of the less noisy sample: (x_t - (beta_t / sqrt(1 - abar_t)) * eps) / sqrt(alpha_t)."""
    x_t, eps_pred = _as_array(x_t), _as_array(eps_pred)
    _check_same_shape(x_t, eps_pred, 'x_t and eps_pred')
    t = sched.check_timestep(t)
    alpha, abar = sched.alpha(t), sched.alpha_bar(t)
    if abar >= 1.0:
        raise ValueError(f'alpha_bar_{t} = {abar}; posterior mean needs alpha_bar < 1')
    coef = (1.0 - alpha) / np.sqrt(1.0 - abar)
    return (x_t - coef * eps_pred) / np.sqrt(alpha)


def predict_x0(
    x_t: np.ndarray, t: int, eps_pred: np.ndarray, sched: NoiseSchedule
) -> np.ndarray:
    """f_theta: (x_t - sqrt(1 - abar_t) * eps) / sqrt(abar_t)."""
    x_t, eps_pred = _as_array(x_t), _as_array(eps_pred)
    _check_same_shape(x_t, eps_pred, 'x_t and eps_pred')
    t = sched.check_timestep(t)
    abar = sched.alpha_bar(t)
    return (x_t - np.sqrt(1.0 - abar) * eps_pred) / np.sqrt(abar)


def ancestral_step(
    model: NoisePredictor,
    x_t: np.ndarray,
    t: int,
    sched: NoiseSchedule,
    rng: RandomSource,
    cond: Optional[Any] = None,
) -> np.ndarray:
    """
    One ancestral DDPM step x_t -> x_{t-1} with sigma_t^2 = beta_t.

    No noise is drawn at t = 1, so the last step returns the posterior mean.
    """
    t = sched.check_timestep(t)
    x_t = _as_array(x_t)
    eps_pred = model.predict(x_t, t, cond)
    mean = posterior_mean(x_t, t, eps_pred, sched)
    if t == 1:
        return mean
    z = draw_normal(rng, x_t.shape)
    return mean + np.sqrt(sched.beta(t)) * z


def ddim_transfer(
    model: NoisePredictor,
    x: np.ndarray,
    t_from: int,
    t_to: int,
    sched: NoiseSchedule,
    cond: Optional[Any] = None,
) -> np.ndarray:
    """
    Deterministic jump x_{t_from} -> x_{t_to}.

    Returns sqrt(abar_to) * f_theta(x, t_from) + sqrt(1 - abar_to) * eps_theta(x, t_from).
    t_from = 0 is the data end of the chain: the model is queried at t = 1 and
    f_theta reduces to x itself because abar_0 = 1. t_to = 0 returns f_theta.
    """
    x = _as_array(x)
    t_from = sched.check_timestep(t_from, low=0)
    t_to = sched.check_timestep(t_to, low=0)
    eps_pred = _as_array(model.predict(x, max(t_from, 1), cond))
    _check_same_shape(x, eps_pred, 'x and model output')
    abar_from, abar_to = sched.alpha_bar(t_from), sched.alpha_bar(t_to)
    x0_pred = (x - np.sqrt(1.0 - abar_from) * eps_pred) / np.sqrt(abar_from)
    return np.sqrt(abar_to) * x0_pred + np.sqrt(1.0 - abar_to) * eps_pred


def ddim_reverse_step(
    model: NoisePredictor,
    x_t: np.ndarray,
    t: int,
    sched: NoiseSchedule,
    cond: Optional[Any] = None,
) -> np.ndarray:
    """phi_theta: deterministic step x_t -> x_{t+1}, defined for 1 <= t <= T - 1."""
    t = sched.check_timestep(t, high=sched.T - 1)
    return ddim_transfer(model, x_t, t, t + 1, sched, cond)


def ddim_denoise_step(
    model: NoisePredictor,
    x_t: np.ndarray,
    t: int,
    sched: NoiseSchedule,
    cond: Optional[Any] = None,
) -> np.ndarray:
    """psi_theta: deterministic step x_t -> x_{t-1}, defined for 2 <= t <= T."""
    t = sched.check_timestep(t, low=2)
    return ddim_transfer(model, x_t, t, t - 1, sched, cond)


def step_plan(t_target: int, stride: int) -> List[int]:
    """Positions 0, stride, 2*stride, ... ending exactly at t_target."""
    if isinstance(stride, bool) or not isinstance(stride, (int, np.integer)) or stride < 1:
        raise ValueError(f'stride must be a positive integer, got {stride!r}')
    plan = list(range(0, int(t_target), int(stride)))
    plan.append(int(t_target))
    return plan


def compose_reverse(
    model: NoisePredictor,
    x0: np.ndarray,
    t_target: int,
    sched: NoiseSchedule,
    stride: int = 1,
    cond: Optional[Any] = None,
) -> np.ndarray:
    """
    Phi_theta: deterministic reverse from x0 up to t_target.

    Uses ceil(t_target / stride) model evaluations; the last jump is shorter
    when stride does not divide t_target.
    """
    t_target = sched.check_timestep(t_target)
    x = _as_array(x0)
    plan = step_plan(t_target, stride)
    for t_from, t_to in zip(plan[:-1], plan[1:]):
        x = ddim_transfer(model, x, t_from, t_to, sched, cond)
    return x


def compose_denoise(
    model: NoisePredictor,
    x_t: np.ndarray,
    t_from: int,
    sched: NoiseSchedule,
    stride: int = 1,
    cond: Optional[Any] = None,
) -> np.ndarray:
    """Psi_theta: deterministic denoise from t_from down to 0 along the reverse plan."""
    t_from = sched.check_timestep(t_from)
    x = _as_array(x_t)
    plan = step_plan(t_from, stride)
    for t_hi, t_lo in zip(plan[:0:-1], plan[-2::-1]):
        x = ddim_transfer(model, x, t_hi, t_lo, sched, cond)
    return x
