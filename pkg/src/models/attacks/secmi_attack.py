"""
SecMI t-error attack.

The target x0 is carried deterministically up to t_sec, pushed one step
further and pulled back one step; the squared round-trip error is the score.
Training points round-trip better, so lower means member.
"""

from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from aws_lambda_powertools import Logger

from src.models.attacks import LOWER_MEANS_MEMBER, AttackScores, BaseAttack
from src.models.attacks.runner import run_attack
from src.models.denoiser.network import is_conditional
from src.models.diffusion.process import (
    NoisePredictor,
    compose_reverse,
    ddim_denoise_step,
    ddim_reverse_step,
)
from src.models.diffusion.schedule import NoiseSchedule
from src.models.metrics.roc import auc

logger = Logger(service='secmi-attack')


def default_t_sec(T: int) -> int:
    return max(1, T // 2)


def secmi_score(
    model: NoisePredictor,
    x0: np.ndarray,
    cond: Optional[Any],
    sched: NoiseSchedule,
    t_sec: int,
    stride: int = 1,
) -> float:
    """
    t-error ||psi(phi(x_t, t), t + 1) - x_t||^2 at x_t = Phi(x0, t_sec).

    Raises:
        ValueError: Unless 1 <= t_sec < T
    """
    t_sec = sched.check_timestep(t_sec, high=sched.T - 1)
    x_t = compose_reverse(model, x0, t_sec, sched, stride, cond)
    x_next = ddim_reverse_step(model, x_t, t_sec, sched, cond)
    x_back = ddim_denoise_step(model, x_next, t_sec + 1, sched, cond)
    return float(np.sum((x_back - x_t) ** 2))


class SecMIAttack(BaseAttack):
    name = 'secmi'
    orientation = LOWER_MEANS_MEMBER

    def __init__(
        self,
        model: NoisePredictor,
        sched: NoiseSchedule,
        t_sec: Optional[int] = None,
        stride: int = 1,
    ):
        super().__init__()
        self.model = model
        self.sched = sched
        t_sec = default_t_sec(sched.T) if t_sec is None else t_sec
        self.t_sec = sched.check_timestep(t_sec, high=sched.T - 1)
        if stride < 1:
            raise ValueError(f'stride must be >= 1, got {stride}')
        self.stride = int(stride)
        self.conditional = is_conditional(model)

    @property
    def params(self) -> Dict[str, Any]:
        return {'t_sec': self.t_sec, 'stride': self.stride}

    def score(self, sample, rng: np.random.Generator) -> float:
        cond = sample.canonical_token if self.conditional else None
        return secmi_score(self.model, sample.x0, cond, self.sched, self.t_sec, self.stride)


def sweep_secmi(
    model: NoisePredictor,
    sched: NoiseSchedule,
    member_set: Sequence,
    nonmember_set: Sequence,
    t_values: Sequence[int],
    stride: int = 1,
    seed: int = 0,
    threads: Optional[int] = None,
) -> Tuple[AttackScores, List[Dict[str, float]]]:
    """
    Run SecMI at every t in `t_values` and keep the strongest run.

    Returns:
        (scores of the maximum-AUC t_sec with the sweep in params, sweep records)
    """
    if len(t_values) == 0:
        raise ValueError('t_sec sweep must be nonempty')
    best: Optional[AttackScores] = None
    best_auc = -1.0
    sweep: List[Dict[str, float]] = []
    for t_sec in t_values:
        scores = run_attack(
            SecMIAttack(model, sched, t_sec, stride), member_set, nonmember_set, seed, threads
        )
        value = auc(scores)
        sweep.append({'t_sec': int(t_sec), 'auc': value})
        if value > best_auc:
            best, best_auc = scores, value

    logger.info(f'SecMI sweep over {list(t_values)}: best t_sec {best.params["t_sec"]}')
    return best.model_copy(update={'params': {**best.params, 'sweep': sweep}}), sweep
