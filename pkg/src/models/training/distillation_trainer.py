"""
Alternating distillation of two disjointly trained models into one student.

Even iterations draw a batch from D1 and regress onto the model trained on D2;
odd iterations draw from D2 and regress onto the model trained on D1. Teacher
outputs are plain arrays, so no derivative reaches the teachers.
"""

import numpy as np
from aws_lambda_powertools import Logger

from src.models.denoiser.network import Denoiser
from src.models.diffusion.schedule import NoiseSchedule
from src.models.training import BaseTrainer, sample_weights
from src.models.training.config import TrainConfig
from src.models.training.splits import DatasetSplit, stack_x0

logger = Logger(service='distillation-trainer')


class DistillationTrainer(BaseTrainer):
    def __init__(self, sched: NoiseSchedule, cfg: TrainConfig):
        super().__init__(sched, cfg)
        self.ensamble['stats'].update(
            {'batches_from_d1': 0, 'batches_from_d2': 0, 'teacher_calls': [0, 0]}
        )

    def fit(
        self,
        teacher1: Denoiser,
        teacher2: Denoiser,
        split: DatasetSplit,
        student: Denoiser,
        rng: np.random.Generator,
    ) -> Denoiser:
        """
        Distill the two teachers into `student` for cfg.iterations steps.

        Args:
            teacher1 (Denoiser): Model trained on split.d1
            teacher2 (Denoiser): Model trained on split.d2
            split (DatasetSplit): The disjoint split both teachers came from
            student (Denoiser): Initial student parameters
            rng (np.random.Generator): Source of batches, timesteps and noise

        Returns:
            Denoiser: Trained student

        Raises:
            ValueError: On an input-dim mismatch between teachers and student
        """
        for role, teacher in (('teacher1', teacher1), ('teacher2', teacher2)):
            if teacher.arch.input_dim != student.arch.input_dim:
                raise ValueError(
                    f'{role} input_dim {teacher.arch.input_dim} does not match '
                    f'student input_dim {student.arch.input_dim}'
                )
            self._check_model(teacher, role)
        self._check_model(student, 'student')

        self.ensamble['status'] = 'in_progress'
        if self.cfg.iterations == 0:
            self.ensamble['status'] = 'completed'
            return student

        subsets = [split.d1, split.d2]
        x0 = [stack_x0(s) for s in subsets]
        weights = [sample_weights(s) for s in subsets]
        teachers = [teacher2, teacher1]
        epoch_length = self._epoch_length(split.members)
        state = self._optimizer(student)
        tokens = [None, None]
        stats = self.ensamble['stats']
        logger.info(
            f'Distilling for {self.cfg.iterations} iterations - |D1|: {len(subsets[0])}, '
            f'|D2|: {len(subsets[1])}, epoch length {epoch_length}'
        )

        try:
            for iteration in range(self.cfg.iterations):
                if iteration % epoch_length == 0:
                    tokens = [self._assign_tokens(s, rng) for s in subsets]
                    stats['epochs'] += 1
                side = iteration % 2
                x_t, t, _, cond = self._draw_batch(x0[side], weights[side], tokens[side], rng)
                target = np.asarray(teachers[side].predict(x_t, t, cond), dtype=np.float64)
                stats['batches_from_d1' if side == 0 else 'batches_from_d2'] += 1
                stats['teacher_calls'][1 - side] += 1
                student, state = self._update(student, state, x_t, t, cond, target, iteration)
        except Exception as e:
            self.ensamble['status'] = 'failed'
            self.ensamble['status_reason'] = str(e)
            logger.error(f'Distillation failed: {str(e)}')
            raise

        self.ensamble['status'] = 'completed'
        logger.info(
            f'Distillation completed - D1 batches: {stats["batches_from_d1"]}, '
            f'D2 batches: {stats["batches_from_d2"]}'
        )
        return student


def train_distillmd(
    teacher1: Denoiser,
    teacher2: Denoiser,
    split: DatasetSplit,
    student: Denoiser,
    sched: NoiseSchedule,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> Denoiser:
    """Functional form of DistillationTrainer.fit."""
    return DistillationTrainer(sched, cfg).fit(teacher1, teacher2, split, student, rng)
