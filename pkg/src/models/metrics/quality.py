import numpy as np
from scipy.spatial.distance import cdist


def _as_batch(samples: np.ndarray, name: str) -> np.ndarray:
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim == 1:
        samples = samples[:, None]
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise ValueError(f'{name} must be a nonempty batch, got shape {samples.shape}')
    return samples


def energy_distance(samples_a: np.ndarray, samples_b: np.ndarray) -> float:
    """
    Empirical energy distance 2 E||a - b|| - E||a - a'|| - E||b - b'||.

    All pairs are used (V-statistic), so A = B gives exactly 0. The cross term
    is averaged in both directions to keep d(A, B) == d(B, A) bit for bit.
    1-D inputs are read as n scalar samples.

    Raises:
        ValueError: On empty batches or a dim mismatch
    """
    a = _as_batch(samples_a, 'samples_a')
    b = _as_batch(samples_b, 'samples_b')
    if a.shape[1] != b.shape[1]:
        raise ValueError(f'Dim mismatch: {a.shape[1]} vs {b.shape[1]}')
    cross = 0.5 * (cdist(a, b).mean() + cdist(b, a).mean())
    within = cdist(a, a).mean() + cdist(b, b).mean()
    return float(max(0.0, 2.0 * cross - within))
