from typing import Any, Dict, Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from src.models.attacks import LOWER_MEANS_MEMBER, BaseAttack


def _check_pool(generated: np.ndarray, dim: int) -> np.ndarray:
    generated = np.asarray(generated, dtype=np.float64)
    if generated.ndim != 2 or generated.shape[0] == 0:
        raise ValueError(f'Generated pool must be a nonempty 2-D batch, got {generated.shape}')
    if generated.shape[1] != dim:
        raise ValueError(
            f'Generated samples have dim {generated.shape[1]}, target has dim {dim}'
        )
    return generated


def blackbox_distance_score(
    generated: np.ndarray, target: np.ndarray, k: int = 1
) -> float:
    """
    Mean Euclidean distance from `target` to its k nearest generated samples.

    With k = 1 this is the minimum distance. Lower means member.

    Raises:
        ValueError: On an empty pool, a dim mismatch or k larger than the pool
    """
    target = np.asarray(target, dtype=np.float64).reshape(-1)
    generated = _check_pool(generated, target.shape[0])
    if not 1 <= k <= len(generated):
        raise ValueError(f'k must lie in [1, {len(generated)}], got {k}')
    distances = cdist(target[None, :], generated)[0]
    return float(np.mean(np.partition(distances, k - 1)[:k]))


class BlackBoxAttack(BaseAttack):
    """
    Distance of a target to the model's generated samples.

    Only generated outputs are used. With `generated_cond`, each target is
    compared to the samples generated from its own canonical condition token.

    Args:
        generated (np.ndarray): (m, d) generated pool
        k (int): Nearest neighbors averaged
        generated_cond (Optional[Sequence[int]]): Condition token per generated row
        source (str): Label of the sampler that produced the pool
    """

    name = 'blackbox'
    orientation = LOWER_MEANS_MEMBER

    def __init__(
        self,
        generated: np.ndarray,
        k: int = 1,
        generated_cond: Optional[Sequence[int]] = None,
        source: str = 'single',
    ):
        super().__init__()
        generated = np.asarray(generated, dtype=np.float64)
        self.generated = _check_pool(generated, generated.shape[-1])
        if k < 1:
            raise ValueError(f'k must be >= 1, got {k}')
        self.k = int(k)
        self.source = source
        self.pools: Dict[Optional[int], np.ndarray] = {None: self.generated}
        if generated_cond is not None:
            tokens = np.asarray(generated_cond, dtype=np.int64)
            if len(tokens) != len(self.generated):
                raise ValueError(
                    f'{len(tokens)} condition tokens for {len(self.generated)} generated samples'
                )
            self.pools = {int(tok): self.generated[tokens == tok] for tok in np.unique(tokens)}

    @property
    def conditional(self) -> bool:
        return None not in self.pools

    @property
    def params(self) -> Dict[str, Any]:
        return {
            'k': self.k,
            'n_generated': int(len(self.generated)),
            'conditional': self.conditional,
            'source': self.source,
        }

    def score(self, sample, rng: np.random.Generator) -> float:
        key = sample.canonical_token if self.conditional else None
        if key not in self.pools:
            raise ValueError(f'No generated samples for condition token {key}')
        return blackbox_distance_score(self.pools[key], sample.x0, self.k)
