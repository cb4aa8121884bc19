"""
Experiment configuration.

A config file is JSON validated by `ExperimentConfig`; unknown keys are
rejected at every level. `load_config` accepts a path or the name of a
shipped config and applies `dotted.key=value` overrides before validation.
"""

import json
from pathlib import Path
from typing import List, Literal, Optional, Sequence, Tuple, Union

from aws_lambda_powertools import Logger
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.models.datasets.generators import DatasetSpec
from src.models.denoiser.network import DenoiserArch
from src.models.sampling.sampler import SamplerPlan
from src.models.training.config import TrainConfig
from src.shared.settings import settings
from src.shared.utils import apply_overrides

logger = Logger(service='experiment-config')

DEFENSES = ('none', 'dualmd', 'distillmd')


class ArchSpec(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)

    hidden: Tuple[int, ...] = (128, 128)
    embed_dim: int = Field(default=16, ge=2)
    activation: Literal['silu', 'tanh'] = 'silu'
    zero_init_output: bool = False


class SamplerSpec(BaseModel):
    """Generation settings shared by every sampler of a run."""

    model_config = ConfigDict(extra='forbid', frozen=True)

    step_kind: Literal['ancestral', 'deterministic'] = 'ancestral'
    start_parity: Literal['A-first', 'B-first'] = 'A-first'
    block_size: int = Field(default=1, ge=1)
    n_samples: int = Field(default=1000, ge=1)
    inference_steps: Optional[int] = Field(default=None, ge=1)
    n_per_condition: Optional[int] = Field(default=None, ge=1)


class AttackSpec(BaseModel):
    """
    One attack entry.

    Fields unused by `kind` are ignored by that attack: loss uses t_list and
    n_mc, secmi uses t_sec, t_sec_sweep and stride, blackbox uses k.
    """

    model_config = ConfigDict(extra='forbid', frozen=True)

    kind: Literal['loss', 'secmi', 'blackbox']
    t_list: Optional[List[int]] = None
    n_mc: int = Field(default=5, ge=1)
    t_sec: Optional[int] = None
    t_sec_sweep: Optional[List[int]] = None
    stride: int = Field(default=1, ge=1)
    k: int = Field(default=1, ge=1)

    @property
    def white_box(self) -> bool:
        return self.kind != 'blackbox'


class MetricsSpec(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)

    fpr_cap: float = Field(default=0.01, ge=0, le=1)
    memorization_eps: Optional[float] = Field(default=None, gt=0)
    gap_n_mc: int = Field(default=5, ge=1)
    quality: bool = True
    generalization: bool = True


class ExperimentConfig(BaseModel):
    """
    Everything that determines one experiment arm.

    The master `seed` fixes the data draw, the split and every derived
    stage seed, so arms that differ only in `defense` share their data.
    """

    model_config = ConfigDict(extra='forbid')

    name: str = Field(default='experiment', min_length=1)
    seed: int = 0
    dataset: DatasetSpec = Field(default_factory=DatasetSpec)
    train: TrainConfig = Field(default_factory=TrainConfig)
    arch: ArchSpec = Field(default_factory=ArchSpec)
    defense: Literal['none', 'dualmd', 'distillmd'] = 'none'
    sampler: SamplerSpec = Field(default_factory=SamplerSpec)
    attacks: List[AttackSpec] = Field(default_factory=lambda: [AttackSpec(kind='secmi')])
    metrics: MetricsSpec = Field(default_factory=MetricsSpec)
    output_dir: Optional[str] = None
    distill_iterations: Optional[int] = None

    @model_validator(mode='after')
    def _check_consistency(self):
        if self.train.iterations < 1:
            raise ValueError('train.iterations must be > 0')
        if self.distill_iterations is not None and self.distill_iterations != self.train.iterations:
            raise ValueError(
                f'Budget parity: distill_iterations ({self.distill_iterations}) must equal '
                f'train.iterations ({self.train.iterations})'
            )
        if self.dataset.conditional != self.train.conditional:
            raise ValueError('dataset.conditional and train.conditional must agree')
        if self.dataset.diversification_k != self.train.diversification_k:
            raise ValueError('dataset.diversification_k and train.diversification_k must agree')
        T = self.train.schedule.T
        for attack in self.attacks:
            for t in [attack.t_sec] + list(attack.t_sec_sweep or []):
                if t is not None and not 1 <= t < T:
                    raise ValueError(f'SecMI t_sec {t} outside [1, {T - 1}]')
            for t in attack.t_list or []:
                if not 1 <= t <= T:
                    raise ValueError(f'Loss-attack timestep {t} outside [1, {T}]')
        if self.sampler.inference_steps is not None:
            if self.sampler.inference_steps > T:
                raise ValueError(f'sampler.inference_steps exceeds T={T}')
            if self.sampler.step_kind != 'deterministic' and self.sampler.inference_steps != T:
                raise ValueError('sampler.inference_steps requires step_kind=deterministic')
        return self

    @property
    def output_path(self) -> Optional[Path]:
        return Path(self.output_dir) if self.output_dir else None

    def build_arch(self) -> DenoiserArch:
        return DenoiserArch(
            input_dim=self.dataset.dim,
            hidden=self.arch.hidden,
            embed_dim=self.arch.embed_dim,
            n_tokens=self.dataset.n_tokens,
            T=self.train.schedule.T,
            activation=self.arch.activation,
            zero_init_output=self.arch.zero_init_output,
        )

    def sampler_plan(self, mode: str, seed: int, n_samples: Optional[int] = None) -> SamplerPlan:
        return SamplerPlan(
            mode=mode,
            step_kind=self.sampler.step_kind,
            start_parity=self.sampler.start_parity,
            block_size=self.sampler.block_size,
            n_samples=n_samples or self.sampler.n_samples,
            seed=seed,
            inference_steps=self.sampler.inference_steps,
        )

    def for_defense(self, defense: str) -> 'ExperimentConfig':
        if defense not in DEFENSES:
            raise ValueError(f"Unknown defense: '{defense}'. Available: {list(DEFENSES)}")
        return ExperimentConfig.model_validate({**self.model_dump(), 'defense': defense})


def load_config(
    source: Union[str, Path, dict], overrides: Sequence[str] = ()
) -> ExperimentConfig:
    """
    Load, override and validate an experiment config.

    Args:
        source: Path to a JSON file, name of a shipped config, or a dict
        overrides: 'dotted.key=value' assignments applied before validation

    Raises:
        ValueError: On unknown config names, unknown keys or invalid values
    """
    if isinstance(source, dict):
        payload = source
    else:
        path = Path(source)
        if not path.exists():
            path = settings.config_path(str(source))
        payload = json.loads(path.read_text())
    payload = apply_overrides(payload, overrides)
    config = ExperimentConfig.model_validate(payload)
    logger.info(
        f'Loaded config {config.name} - defense: {config.defense}, seed: {config.seed}, '
        f'iterations: {config.train.iterations}'
    )
    return config
