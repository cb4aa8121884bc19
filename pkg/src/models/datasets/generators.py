"""
Toy datasets: mixture ring, 2-D swiss roll and 2-D checkerboard.

Members and non-members are drawn i.i.d. from the same distribution; the
first n_member draws are members. Conditional datasets give class c the
synonym tokens c*k .. c*k + k - 1.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import pandas as pd
from aws_lambda_powertools import Logger
from pydantic import BaseModel, ConfigDict, Field, model_validator
from sklearn.datasets import make_swiss_roll

from src.models.training.splits import DatasetSplit, LabeledSample, split_disjoint
from src.shared.utils import atomic_write_csv, derive_seed

logger = Logger(service='datasets')

RING_TRUNCATION = 4.0
SWISS_ROLL_SCALE = 5.0
CHECKERBOARD_CELLS = 4

GeneratorName = Literal['gaussian-mixture-ring', 'swiss-roll-2d', 'checkerboard-2d']


class DuplicationSpec(BaseModel):
    """The first `n_samples` members are repeated `copies` times in the training multiset."""

    model_config = ConfigDict(extra='forbid', frozen=True)

    n_samples: int = Field(default=1, ge=1)
    copies: int = Field(default=100, ge=2)


class DatasetSpec(BaseModel):
    model_config = ConfigDict(extra='forbid', frozen=True)

    generator: GeneratorName = 'gaussian-mixture-ring'
    n_member: int = Field(default=64, ge=2)
    n_test: int = Field(default=64, ge=1)
    dim: int = Field(default=2, ge=2)
    n_classes: int = Field(default=8, ge=1)
    radius: float = Field(default=2.0, gt=0)
    std: float = Field(default=0.2, gt=0)
    conditional: bool = False
    diversification_k: int = Field(default=1, ge=1)
    stratified: bool = False
    duplication: Optional[DuplicationSpec] = None

    @model_validator(mode='after')
    def _check_spec(self):
        if self.generator != 'gaussian-mixture-ring' and self.dim != 2:
            raise ValueError(f'{self.generator} is 2-D only, got dim={self.dim}')
        if self.generator == 'checkerboard-2d' and self.n_classes > CHECKERBOARD_CELLS**2 // 2:
            raise ValueError(
                f'checkerboard-2d has {CHECKERBOARD_CELLS**2 // 2} cells, '
                f'got n_classes={self.n_classes}'
            )
        if self.duplication and self.duplication.n_samples > self.n_member:
            raise ValueError(
                f'Cannot duplicate {self.duplication.n_samples} of {self.n_member} members'
            )
        return self

    @property
    def n_tokens(self) -> Optional[int]:
        return self.n_classes * self.diversification_k if self.conditional else None


@dataclass(eq=False)
class GeneratedDataset:
    samples: List[LabeledSample]
    split: DatasetSplit
    meta: Dict[str, object] = field(default_factory=dict)

    @property
    def duplicated(self) -> List[LabeledSample]:
        return [s for s in self.samples if s.copies > 1]


def _ring_centers(spec: DatasetSpec) -> np.ndarray:
    angles = 2.0 * np.pi * np.arange(spec.n_classes) / spec.n_classes
    centers = np.zeros((spec.n_classes, spec.dim))
    centers[:, 0] = spec.radius * np.cos(angles)
    centers[:, 1] = spec.radius * np.sin(angles)
    return centers


def _gaussian_mixture_ring(
    spec: DatasetSpec, n: int, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    labels = rng.integers(spec.n_classes, size=n)
    noise = rng.standard_normal((n, spec.dim))
    # Redraw until every offset lies within the truncation radius.
    outside = np.linalg.norm(noise, axis=1) > RING_TRUNCATION
    while outside.any():
        noise[outside] = rng.standard_normal((int(outside.sum()), spec.dim))
        outside = np.linalg.norm(noise, axis=1) > RING_TRUNCATION
    return _ring_centers(spec)[labels] + spec.std * noise, labels


def _swiss_roll(
    spec: DatasetSpec, n: int, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    points, position = make_swiss_roll(
        n_samples=n,
        noise=spec.std * SWISS_ROLL_SCALE,
        random_state=int(rng.integers(2**31 - 1)),
    )
    x = points[:, [0, 2]] / SWISS_ROLL_SCALE
    # make_swiss_roll draws the roll position from [1.5 pi, 4.5 pi].
    fraction = (position - 1.5 * np.pi) / (3.0 * np.pi)
    labels = np.clip((fraction * spec.n_classes).astype(int), 0, spec.n_classes - 1)
    return x, labels


def _checkerboard(
    spec: DatasetSpec, n: int, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    cells = [
        (row, col)
        for row in range(CHECKERBOARD_CELLS)
        for col in range(CHECKERBOARD_CELLS)
        if (row + col) % 2 == 0
    ]
    picks = rng.integers(len(cells), size=n)
    offsets = rng.uniform(0.0, 1.0, size=(n, 2))
    corner = np.asarray(cells, dtype=np.float64)[picks]
    x = corner + offsets - CHECKERBOARD_CELLS / 2.0
    return x, picks % spec.n_classes


GENERATORS: Dict[str, Callable[..., Tuple[np.ndarray, np.ndarray]]] = {
    'gaussian-mixture-ring': _gaussian_mixture_ring,
    'swiss-roll-2d': _swiss_roll,
    'checkerboard-2d': _checkerboard,
}


def class_tokens(label: int, k: int) -> Tuple[int, ...]:
    return tuple(int(label) * k + j for j in range(k))


def gen_dataset(spec: DatasetSpec, seed: int) -> GeneratedDataset:
    """
    Draw the dataset and its disjoint member split.

    Args:
        spec (DatasetSpec): Generator and counts
        seed (int): Master data seed; the draw and the split use derived seeds

    Returns:
        GeneratedDataset: Samples (members first), split and generator metadata

    Raises:
        ValueError: On an unknown generator
    """
    if spec.generator not in GENERATORS:
        raise ValueError(
            f"Unknown generator: '{spec.generator}'. Available: {sorted(GENERATORS)}"
        )
    n_total = spec.n_member + spec.n_test
    rng = np.random.default_rng(derive_seed(seed, 'gen_data'))
    x, labels = GENERATORS[spec.generator](spec, n_total, rng)

    duplicated = spec.duplication.n_samples if spec.duplication else 0
    samples: List[LabeledSample] = []
    for i in range(n_total):
        member = i < spec.n_member
        samples.append(
            LabeledSample(
                x0=np.asarray(x[i], dtype=np.float64),
                cond=class_tokens(labels[i], spec.diversification_k) if spec.conditional else None,
                label=int(labels[i]),
                member=member,
                copies=spec.duplication.copies if member and i < duplicated else 1,
            )
        )

    split = split_disjoint(samples, derive_seed(seed, 'split'), stratified=spec.stratified)
    meta = {
        'generator': spec.generator,
        'n_member': spec.n_member,
        'n_test': spec.n_test,
        'multiset_size': int(sum(s.copies for s in samples if s.member)),
        'duplicated_indices': list(range(duplicated)),
        'split_warnings': list(split.warnings),
    }
    logger.info(
        f'Generated {spec.generator}: {spec.n_member} members, {spec.n_test} non-members, '
        f'{duplicated} duplicated sample(s)'
    )
    return GeneratedDataset(samples=samples, split=split, meta=meta)


def dataset_frame(dataset: GeneratedDataset) -> pd.DataFrame:
    """One row per sample: coordinates, label, membership, copies, tokens and subset."""
    split = dataset.split
    subset = {i: 'd1' for i in split.d1_indices}
    subset.update({i: 'd2' for i in split.d2_indices})
    subset.update({i: 'test' for i in split.test_indices})
    dim = len(dataset.samples[0].x0)
    rows = []
    for i, s in enumerate(dataset.samples):
        row = {f'x{j}': float(s.x0[j]) for j in range(dim)}
        row.update(
            {
                'label': s.label,
                'member': s.member,
                'copies': s.copies,
                'cond': '' if s.cond is None else ' '.join(str(tok) for tok in s.cond),
                'subset': subset[i],
            }
        )
        rows.append(row)
    return pd.DataFrame(rows)


def write_dataset(dataset: GeneratedDataset, path: Union[str, Path]) -> Path:
    return atomic_write_csv(path, dataset_frame(dataset))


def read_dataset(path: Union[str, Path]) -> GeneratedDataset:
    """
    Rebuild samples and split from a dataset CSV.

    Raises:
        ValueError: If the stored subsets violate the split invariants
    """
    frame = pd.read_csv(
        path, keep_default_na=False, dtype={'cond': str}, float_precision='round_trip'
    )
    coords = sorted(
        (c for c in frame.columns if c.startswith('x') and c[1:].isdigit()),
        key=lambda c: int(c[1:]),
    )
    samples: List[LabeledSample] = []
    for _, row in frame.iterrows():
        cond = tuple(int(tok) for tok in row['cond'].split()) if row['cond'] else None
        samples.append(
            LabeledSample(
                x0=row[coords].to_numpy(dtype=np.float64),
                cond=cond,
                label=int(row['label']),
                member=bool(row['member']),
                copies=int(row['copies']),
            )
        )
    subsets = frame['subset'].tolist()
    split = DatasetSplit(
        all_samples=samples,
        d1_indices=tuple(i for i, s in enumerate(subsets) if s == 'd1'),
        d2_indices=tuple(i for i, s in enumerate(subsets) if s == 'd2'),
        test_indices=tuple(i for i, s in enumerate(subsets) if s == 'test'),
    )
    return GeneratedDataset(samples=samples, split=split, meta={'source': str(path)})
