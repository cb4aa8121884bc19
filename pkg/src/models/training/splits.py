"""
Labeled samples and the disjoint member split D1 / D2.

Duplicated training points are represented by a multiplicity (`copies`) on a
single sample, so every copy lands on the same side of the split.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from aws_lambda_powertools import Logger

logger = Logger(service='dataset-split')


@dataclass(frozen=True, eq=False)
class LabeledSample:
    """
    One data point with its condition tokens and membership flag.

    Args:
        x0 (np.ndarray): Data point, shape (d,)
        cond (Optional[Tuple[int, ...]]): Interchangeable condition tokens (at least one
            when conditional); the first one is the canonical token
        label (Optional[int]): Generator class / mode index
        member (bool): Whether the sample belongs to the training set
        copies (int): Multiplicity in the training multiset
    """

    x0: np.ndarray
    cond: Optional[Tuple[int, ...]] = None
    label: Optional[int] = None
    member: bool = True
    copies: int = 1

    def __post_init__(self):
        if self.cond is not None and len(self.cond) == 0:
            raise ValueError('Conditional samples need at least one condition token')
        if self.copies < 1:
            raise ValueError(f'copies must be >= 1, got {self.copies}')

    @property
    def canonical_token(self) -> Optional[int]:
        return None if self.cond is None else int(self.cond[0])


@dataclass(frozen=True, eq=False)
class DatasetSplit:
    """
    Disjoint member subsets plus the held-out non-member indices.

    Args:
        all_samples (List[LabeledSample]): Every sample, members and non-members
        d1_indices / d2_indices (Tuple[int, ...]): Member halves
        test_indices (Tuple[int, ...]): Non-members
    """

    all_samples: List[LabeledSample]
    d1_indices: Tuple[int, ...]
    d2_indices: Tuple[int, ...]
    test_indices: Tuple[int, ...]
    warnings: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        d1, d2, test = set(self.d1_indices), set(self.d2_indices), set(self.test_indices)
        members = {i for i, s in enumerate(self.all_samples) if s.member}
        if d1 & d2:
            raise ValueError(f'D1 and D2 overlap on indices {sorted(d1 & d2)}')
        if d1 | d2 != members:
            raise ValueError('D1 and D2 must cover exactly the member set')
        if test & members:
            raise ValueError('Test indices must be disjoint from the member set')
        if abs(len(d1) - len(d2)) > 1:
            raise ValueError(f'Unbalanced split: |D1|={len(d1)}, |D2|={len(d2)}')

    @property
    def member_indices(self) -> Tuple[int, ...]:
        return tuple(sorted(self.d1_indices + self.d2_indices))

    def subset(self, indices: Sequence[int]) -> List[LabeledSample]:
        return [self.all_samples[i] for i in indices]

    @property
    def d1(self) -> List[LabeledSample]:
        return self.subset(self.d1_indices)

    @property
    def d2(self) -> List[LabeledSample]:
        return self.subset(self.d2_indices)

    @property
    def members(self) -> List[LabeledSample]:
        return self.subset(self.member_indices)

    @property
    def test(self) -> List[LabeledSample]:
        return self.subset(self.test_indices)


def split_disjoint(
    samples: Sequence[LabeledSample], seed: int, stratified: bool = False
) -> DatasetSplit:
    """
    Partition the member samples uniformly at random into balanced halves.

    Non-members pass through untouched as the test set. With `stratified`,
    each class is dealt alternately so per-class counts differ by at most one.

    Raises:
        ValueError: If fewer than two member samples are present
    """
    samples = list(samples)
    members = [i for i, s in enumerate(samples) if s.member]
    test = tuple(i for i, s in enumerate(samples) if not s.member)
    if len(members) < 2:
        raise ValueError(
            f'Disjoint split needs at least 2 member samples, got {len(members)}'
        )

    rng = np.random.default_rng(seed)
    if stratified:
        labels = sorted({samples[i].label for i in members}, key=lambda v: (v is None, v))
        order: List[int] = []
        for label in labels:
            group = [i for i in members if samples[i].label == label]
            order.extend(int(i) for i in rng.permutation(group))
        first = int(rng.integers(2))
        d1 = tuple(sorted(i for k, i in enumerate(order) if k % 2 == first))
        d2 = tuple(sorted(i for k, i in enumerate(order) if k % 2 != first))
    else:
        shuffled = [int(i) for i in rng.permutation(members)]
        half = (len(shuffled) + 1) // 2
        d1 = tuple(sorted(shuffled[:half]))
        d2 = tuple(sorted(shuffled[half:]))

    warnings: List[str] = []
    for name, subset in (('D1', d1), ('D2', d2)):
        if len(subset) == 1:
            message = f'{name} holds a single sample (fine-tuning regime)'
            logger.warning(message)
            warnings.append(message)

    logger.info(
        f'Disjoint split - D1: {len(d1)}, D2: {len(d2)}, test: {len(test)}, '
        f'stratified: {stratified}'
    )
    return DatasetSplit(
        all_samples=samples,
        d1_indices=d1,
        d2_indices=d2,
        test_indices=test,
        warnings=tuple(warnings),
    )


def stack_x0(samples: Sequence[LabeledSample]) -> np.ndarray:
    """Data points of `samples` as an (n, d) float64 array."""
    return np.stack([np.asarray(s.x0, dtype=np.float64) for s in samples])


def member_multiset(samples: Sequence[LabeledSample]) -> np.ndarray:
    """Member data points with every duplicate expanded."""
    rows = [s.x0 for s in samples if s.member for _ in range(s.copies)]
    return np.stack([np.asarray(r, dtype=np.float64) for r in rows])


def canonical_tokens(samples: Sequence[LabeledSample]) -> Optional[np.ndarray]:
    """
    Canonical condition token per sample, or None for unconditional data.

    Raises:
        ValueError: If conditional and unconditional samples are mixed
    """
    tokens = [s.canonical_token for s in samples]
    if all(tok is None for tok in tokens):
        return None
    if any(tok is None for tok in tokens):
        raise ValueError('Mixed conditional and unconditional samples')
    return np.asarray(tokens, dtype=np.int64)
