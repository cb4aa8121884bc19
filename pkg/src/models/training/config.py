from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.models.denoiser.optimizer import DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_LEARNING_RATE
from src.models.diffusion.schedule import (
    DEFAULT_BETA_END,
    DEFAULT_BETA_START,
    DEFAULT_T,
    NoiseSchedule,
    make_schedule,
)


class ScheduleSpec(BaseModel):
    """Noise schedule parameters."""

    model_config = ConfigDict(extra='forbid', frozen=True)

    kind: Literal['linear'] = 'linear'
    T: int = Field(default=DEFAULT_T, ge=1)
    beta_start: float = Field(default=DEFAULT_BETA_START, gt=0, le=1)
    beta_end: float = Field(default=DEFAULT_BETA_END, gt=0, le=1)

    @model_validator(mode='after')
    def _check_schedule(self):
        if self.beta_start > self.beta_end:
            raise ValueError(
                f'beta_start ({self.beta_start}) must not exceed beta_end ({self.beta_end})'
            )
        self.build()
        return self

    def build(self) -> NoiseSchedule:
        return make_schedule(self.kind, self.T, self.beta_start, self.beta_end)


class TrainConfig(BaseModel):
    """
    Budget and optimizer settings of one training run.

    The same `iterations` value is used for the baseline, both disjoint
    models and the distilled student of an experiment.
    """

    model_config = ConfigDict(extra='forbid', frozen=True)

    iterations: int = Field(default=20000, ge=0)
    batch_size: int = Field(default=64, ge=1)
    learning_rate: float = Field(default=DEFAULT_LEARNING_RATE, gt=0)
    beta1: float = Field(default=DEFAULT_BETA1, ge=0, lt=1)
    beta2: float = Field(default=DEFAULT_BETA2, ge=0, lt=1)
    seed: int = 0
    schedule: ScheduleSpec = Field(default_factory=ScheduleSpec)
    conditional: bool = False
    diversification_k: int = Field(default=1, ge=1)
    log_every: int = Field(default=1000, ge=1)

    @property
    def diversification(self) -> bool:
        return self.conditional and self.diversification_k > 1
