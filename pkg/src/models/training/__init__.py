import math
from abc import ABC, abstractmethod
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from aws_lambda_powertools import Logger

from src.models.denoiser.network import Denoiser, loss_and_grads
from src.models.denoiser.optimizer import OptimizerState, adam_update, init_optimizer
from src.models.diffusion.process import diffuse_batch
from src.models.diffusion.schedule import NoiseSchedule
from src.models.training.config import TrainConfig
from src.models.training.splits import LabeledSample
from src.shared.utils import atomic_write_csv

logger = Logger(service='trainer')


class BaseTrainer(ABC):
    """
    Shared batching, noising and update logic of the training loops.

    Run state lives in `self.ensamble` (status, status_reason, loss_trace,
    stats) so handlers can report it after `fit` returns or fails.
    """

    def __init__(self, sched: NoiseSchedule, cfg: TrainConfig):
        self.sched = sched
        self.cfg = cfg
        self.ensamble = {
            'status': 'pending',
            'status_reason': '',
            'loss_trace': [],
            'stats': {'iterations': 0, 'epochs': 0},
        }

    @abstractmethod
    def fit(self, **kwargs):
        pass

    def _check_model(self, model: Denoiser, role: str) -> None:
        if model.arch.T != self.sched.T:
            raise ValueError(
                f'{role} embeds timesteps up to {model.arch.T} but the schedule has '
                f'T={self.sched.T}'
            )

    def _optimizer(self, model: Denoiser) -> OptimizerState:
        return init_optimizer(
            model,
            learning_rate=self.cfg.learning_rate,
            beta1=self.cfg.beta1,
            beta2=self.cfg.beta2,
        )

    def _epoch_length(self, samples: Sequence[LabeledSample]) -> int:
        total = sum(s.copies for s in samples)
        return max(1, math.ceil(total / self.cfg.batch_size))

    def _assign_tokens(
        self, samples: Sequence[LabeledSample], rng: np.random.Generator
    ) -> Optional[np.ndarray]:
        """Per-epoch condition token of every sample (uniform over its tokens when diversified)."""
        if not self.cfg.conditional:
            return None
        tokens = np.empty(len(samples), dtype=np.int64)
        for i, sample in enumerate(samples):
            if sample.cond is None:
                raise ValueError(f'Conditional training got sample {i} without tokens')
            if self.cfg.diversification and len(sample.cond) > 1:
                tokens[i] = sample.cond[int(rng.integers(len(sample.cond)))]
            else:
                tokens[i] = sample.cond[0]
        return tokens

    def _draw_batch(
        self,
        x0: np.ndarray,
        weights: np.ndarray,
        tokens: Optional[np.ndarray],
        rng: np.random.Generator,
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray, Optional[np.ndarray]]:
        """With-replacement batch, t ~ U{1..T}, eps ~ N(0, I) and the noised x_t."""
        idx = rng.choice(len(x0), size=self.cfg.batch_size, replace=True, p=weights)
        t = rng.integers(1, self.sched.T + 1, size=self.cfg.batch_size)
        eps = rng.standard_normal((self.cfg.batch_size, x0.shape[1]))
        x_t = diffuse_batch(x0[idx], t, eps, self.sched)
        cond = None if tokens is None else tokens[idx]
        return x_t, t, eps, cond

    def _update(
        self,
        model: Denoiser,
        state: OptimizerState,
        x_t: np.ndarray,
        t: np.ndarray,
        cond: Optional[np.ndarray],
        target: np.ndarray,
        iteration: int,
    ) -> Tuple[Denoiser, OptimizerState]:
        loss, grads = loss_and_grads(model, x_t, t, cond, target)
        trace: List[float] = self.ensamble['loss_trace']
        if not np.isfinite(loss):
            last = trace[-1] if trace else None
            raise FloatingPointError(
                f'Non-finite loss {loss} at iteration {iteration} '
                f'(timesteps {t.tolist()}, last finite loss {last})'
            )
        trace.append(loss)
        self.ensamble['stats']['iterations'] = iteration + 1
        if (iteration + 1) % self.cfg.log_every == 0:
            window = trace[-self.cfg.log_every :]
            logger.info(
                f'Iteration {iteration + 1}/{self.cfg.iterations} - '
                f'running loss: {float(np.mean(window)):.6f}'
            )
        return adam_update(model, grads, state)

    def loss_frame(self) -> pd.DataFrame:
        trace = self.ensamble['loss_trace']
        return pd.DataFrame({'iteration': np.arange(len(trace)), 'loss': trace})

    def write_loss_trace(self, path: Union[str, Path]) -> Path:
        """Write the (iteration, loss) trace as CSV."""
        return atomic_write_csv(path, self.loss_frame())


def sample_weights(samples: Sequence[LabeledSample]) -> np.ndarray:
    """Sampling probability of each sample, proportional to its multiplicity."""
    copies = np.asarray([s.copies for s in samples], dtype=np.float64)
    return copies / copies.sum()
