import math
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src.models.attacks import LOWER_MEANS_MEMBER, BaseAttack
from src.models.denoiser.network import is_conditional
from src.models.diffusion.process import NoisePredictor, diffuse_batch
from src.models.diffusion.schedule import NoiseSchedule

DEFAULT_N_MC = 5


def default_t_list(T: int) -> List[int]:
    """ceil(T/10) * j for j = 1..10, capped at T."""
    step = math.ceil(T / 10)
    return [step * j for j in range(1, 11) if step * j <= T]


def denoising_loss_score(
    model: NoisePredictor,
    x0: np.ndarray,
    cond: Optional[Any],
    sched: NoiseSchedule,
    t_list: Sequence[int],
    n_mc: int,
    rng: np.random.Generator,
) -> float:
    """
    Mean of ||eps_theta(x_t, t, c) - eps||^2 over t in t_list and n_mc noise draws.

    Lower means member.

    Raises:
        ValueError: For an empty t_list, a timestep out of range or n_mc < 1
    """
    if len(t_list) == 0:
        raise ValueError('t_list must be nonempty')
    if n_mc < 1:
        raise ValueError(f'n_mc must be >= 1, got {n_mc}')
    for t in t_list:
        sched.check_timestep(t)

    x0 = np.asarray(x0, dtype=np.float64)
    t = np.repeat(np.asarray(t_list, dtype=np.int64), n_mc)
    eps = rng.standard_normal((len(t), x0.shape[-1]))
    x_t = diffuse_batch(np.broadcast_to(x0, eps.shape), t, eps, sched)
    pred = np.asarray(model.predict(x_t, t, cond), dtype=np.float64)
    return float(np.mean(np.sum((pred - eps) ** 2, axis=1)))


class LossAttack(BaseAttack):
    """
    Denoising-loss threshold attack.

    Args:
        model: Noise predictor under attack
        sched (NoiseSchedule): Its schedule
        t_list (Optional[Sequence[int]]): Probe timesteps, default_t_list(T) when None
        n_mc (int): Noise draws per timestep
    """

    name = 'loss'
    orientation = LOWER_MEANS_MEMBER

    def __init__(
        self,
        model: NoisePredictor,
        sched: NoiseSchedule,
        t_list: Optional[Sequence[int]] = None,
        n_mc: int = DEFAULT_N_MC,
    ):
        super().__init__()
        self.model = model
        self.sched = sched
        t_list = default_t_list(sched.T) if t_list is None else t_list
        if len(t_list) == 0:
            raise ValueError('t_list must be nonempty')
        self.t_list = [int(sched.check_timestep(int(t))) for t in t_list]
        self.n_mc = int(n_mc)
        self.conditional = is_conditional(model)

    @property
    def params(self) -> Dict[str, Any]:
        return {'t_list': self.t_list, 'n_mc': self.n_mc}

    def score(self, sample, rng: np.random.Generator) -> float:
        cond = sample.canonical_token if self.conditional else None
        return denoising_loss_score(
            self.model, sample.x0, cond, self.sched, self.t_list, self.n_mc, rng
        )
