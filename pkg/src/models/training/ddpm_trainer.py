from typing import Sequence

import numpy as np
from aws_lambda_powertools import Logger

from src.models.denoiser.network import Denoiser
from src.models.diffusion.schedule import NoiseSchedule
from src.models.training import BaseTrainer, sample_weights
from src.models.training.config import TrainConfig
from src.models.training.splits import LabeledSample, stack_x0

logger = Logger(service='ddpm-trainer')


class DDPMTrainer(BaseTrainer):
    """
    Plain denoising training: minimize ||eps - eps_theta(x_t, t, c)||^2.

    Used for the undefended baseline and for each of the two disjoint models.

    Args:
        sched (NoiseSchedule): Diffusion schedule
        cfg (TrainConfig): Budget and optimizer settings
        name (str): Label used in log lines ('baseline', 'theta1', ...)
    """

    def __init__(self, sched: NoiseSchedule, cfg: TrainConfig, name: str = 'ddpm'):
        super().__init__(sched, cfg)
        self.name = name
        self.ensamble['stats'].update({'n_samples': 0, 'multiset_size': 0})

    def fit(
        self, model: Denoiser, data: Sequence[LabeledSample], rng: np.random.Generator
    ) -> Denoiser:
        """
        Train `model` on `data` for cfg.iterations steps.

        Returns:
            Denoiser: The trained model (the input itself when iterations == 0)

        Raises:
            ValueError: If data is empty or the model does not fit the schedule
            FloatingPointError: If the loss becomes non-finite
        """
        data = list(data)
        if not data:
            raise ValueError('Training data is empty')
        self._check_model(model, self.name)

        stats = self.ensamble['stats']
        stats['n_samples'] = len(data)
        stats['multiset_size'] = int(sum(s.copies for s in data))
        self.ensamble['status'] = 'in_progress'
        if self.cfg.iterations == 0:
            self.ensamble['status'] = 'completed'
            return model

        x0 = stack_x0(data)
        weights = sample_weights(data)
        epoch_length = self._epoch_length(data)
        state = self._optimizer(model)
        tokens = None
        logger.info(
            f'Training {self.name}: {self.cfg.iterations} iterations on '
            f'{len(data)} samples (multiset {stats["multiset_size"]}), '
            f'epoch length {epoch_length}, diversification: {self.cfg.diversification}'
        )

        try:
            for iteration in range(self.cfg.iterations):
                if iteration % epoch_length == 0:
                    tokens = self._assign_tokens(data, rng)
                    stats['epochs'] += 1
                x_t, t, eps, cond = self._draw_batch(x0, weights, tokens, rng)
                model, state = self._update(model, state, x_t, t, cond, eps, iteration)
        except Exception as e:
            self.ensamble['status'] = 'failed'
            self.ensamble['status_reason'] = str(e)
            logger.error(f'Training {self.name} failed: {str(e)}')
            raise

        self.ensamble['status'] = 'completed'
        logger.info(
            f'Training {self.name} completed - final loss: '
            f'{self.ensamble["loss_trace"][-1]:.6f}'
        )
        return model


def train_ddpm(
    model: Denoiser,
    data: Sequence[LabeledSample],
    sched: NoiseSchedule,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> Denoiser:
    """Functional form of DDPMTrainer.fit."""
    return DDPMTrainer(sched, cfg).fit(model, data, rng)
