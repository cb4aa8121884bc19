"""
Nearest-neighbor memorization metrics and t-error memorization detection.

A generated sample counts as memorized when its nearest training point lies
within eps. The default eps is a tenth of the median nearest-neighbor distance
inside the training set, which keeps the threshold scale-free across datasets.
"""

from typing import Optional, Sequence

import numpy as np
from aws_lambda_powertools import Logger
from sklearn.neighbors import NearestNeighbors

from src.models.attacks.runner import run_attack
from src.models.attacks.secmi_attack import SecMIAttack
from src.models.diffusion.process import NoisePredictor
from src.models.diffusion.schedule import NoiseSchedule
from src.models.metrics.roc import RocReport, roc_report

logger = Logger(service='memorization')

DEFAULT_EPS_FRACTION = 0.1


def _as_points(points: np.ndarray, name: str) -> np.ndarray:
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or points.shape[0] == 0:
        raise ValueError(f'{name} must be a nonempty (n, d) batch, got shape {points.shape}')
    return points


def median_nn_distance(train_set: np.ndarray) -> float:
    """
    Median distance from each distinct training point to its nearest other point.

    Raises:
        ValueError: With fewer than two distinct points
    """
    points = np.unique(_as_points(train_set, 'train_set'), axis=0)
    if len(points) < 2:
        raise ValueError('Median nearest-neighbor distance needs two distinct points')
    index = NearestNeighbors(n_neighbors=2, algorithm='kd_tree').fit(points)
    distances, _ = index.kneighbors(points)
    return float(np.median(distances[:, 1]))


def default_memorization_eps(train_set: np.ndarray) -> float:
    return DEFAULT_EPS_FRACTION * median_nn_distance(train_set)


def memorization_fraction(
    generated: np.ndarray, train_set: np.ndarray, eps: Optional[float] = None
) -> float:
    """
    Fraction of generated samples whose nearest training point lies within eps.

    Args:
        generated (np.ndarray): (m, d) generated samples
        train_set (np.ndarray): (n, d) training points
        eps (Optional[float]): Radius, default_memorization_eps(train_set) when None

    Raises:
        ValueError: On empty inputs, a dim mismatch or eps <= 0
    """
    generated = _as_points(generated, 'generated')
    train_set = _as_points(train_set, 'train_set')
    if generated.shape[1] != train_set.shape[1]:
        raise ValueError(f'Dim mismatch: {generated.shape[1]} vs {train_set.shape[1]}')
    if eps is None:
        eps = default_memorization_eps(train_set)
    if eps <= 0:
        raise ValueError(f'eps must be positive, got {eps}')
    index = NearestNeighbors(n_neighbors=1, algorithm='kd_tree').fit(train_set)
    distances, _ = index.kneighbors(generated)
    return float(np.mean(distances[:, 0] <= eps))


def memorization_detection(
    model: NoisePredictor,
    memorized_set: Sequence,
    clean_set: Sequence,
    sched: NoiseSchedule,
    t_sec: Optional[int] = None,
    stride: int = 1,
    seed: int = 0,
    threads: Optional[int] = None,
) -> RocReport:
    """
    Separate memorized from clean samples with the SecMI t-error.

    Memorized samples play the member role, so a high AUC means the t-error
    flags memorization.
    """
    scores = run_attack(
        SecMIAttack(model, sched, t_sec, stride), memorized_set, clean_set, seed, threads
    )
    report = roc_report(scores)
    logger.info(
        f'Memorization detection: AUC {report.auc:.4f} over '
        f'{len(memorized_set)} memorized / {len(clean_set)} clean samples'
    )
    return report
