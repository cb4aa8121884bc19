"""
Noise schedules for the forward diffusion process.

Timesteps are 1-based: index t of every sequence refers to step t, and the
boundary value alpha_bar_0 = 1 is available through `alpha_bar(0)`.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict

import numpy as np

# Defaults for the toy datasets (full T = 1000 is supported)
DEFAULT_T = 100
DEFAULT_BETA_START = 1e-4
DEFAULT_BETA_END = 0.05


@dataclass(frozen=True)
class NoiseSchedule:
    """
    beta/alpha/alpha_bar sequences over T timesteps.

    Args:
        T (int): Number of timesteps
        betas (np.ndarray): beta_1..beta_T, each in (0, 1]
        alphas (np.ndarray): alpha_t = 1 - beta_t
        alpha_bars (np.ndarray): running product of alphas
        kind (str): Name of the schedule family that produced it
    """

    T: int
    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray
    kind: str = field(default='linear')

    def __post_init__(self):
        for name in ('betas', 'alphas', 'alpha_bars'):
            values = getattr(self, name)
            if len(values) != self.T:
                raise ValueError(
                    f'Schedule {name} has length {len(values)}, expected T={self.T}'
                )
            values.setflags(write=False)

    def check_timestep(self, t: int, low: int = 1, high: int = None) -> int:
        """
        Validate a timestep against [low, high] (high defaults to T).

        Raises:
            ValueError: If t is not an integer inside the range
        """
        high = self.T if high is None else high
        if isinstance(t, (bool, np.bool_)) or not isinstance(t, (int, np.integer)):
            raise ValueError(f'Timestep must be an integer, got {t!r}')
        if not low <= int(t) <= high:
            raise ValueError(f'Timestep {t} out of range [{low}, {high}]')
        return int(t)

    def beta(self, t: int) -> float:
        return float(self.betas[t - 1])

    def alpha(self, t: int) -> float:
        return float(self.alphas[t - 1])

    def alpha_bar(self, t: int) -> float:
        """alpha_bar_t for 0 <= t <= T, with alpha_bar_0 = 1."""
        if t == 0:
            return 1.0
        return float(self.alpha_bars[t - 1])

    def to_dict(self) -> Dict[str, object]:
        return {
            'kind': self.kind,
            'T': self.T,
            'beta_start': float(self.betas[0]),
            'beta_end': float(self.betas[-1]),
        }


def make_linear_schedule(
    T: int = DEFAULT_T,
    beta_start: float = DEFAULT_BETA_START,
    beta_end: float = DEFAULT_BETA_END,
) -> NoiseSchedule:
    """
    Build a schedule with betas linearly interpolated from beta_start to beta_end.

    Args:
        T: Number of timesteps (>= 1)
        beta_start: beta_1, in (0, 1]
        beta_end: beta_T, in [beta_start, 1]

    Returns:
        NoiseSchedule with derived alphas and alpha_bars

    Raises:
        ValueError: On non-positive T, betas outside (0, 1], beta_start > beta_end
            or a schedule whose alpha_bar reaches zero
    """
    if isinstance(T, bool) or not isinstance(T, (int, np.integer)) or T < 1:
        raise ValueError(f'T must be a positive integer, got {T!r}')
    for name, value in (('beta_start', beta_start), ('beta_end', beta_end)):
        if not 0.0 < value <= 1.0:
            raise ValueError(f'{name} must lie in (0, 1], got {value}')
    if beta_start > beta_end:
        raise ValueError(
            f'beta_start ({beta_start}) must not exceed beta_end ({beta_end})'
        )

    if T == 1:
        betas = np.array([beta_start], dtype=np.float64)
    else:
        betas = np.linspace(beta_start, beta_end, int(T), dtype=np.float64)
    alphas = 1.0 - betas
    alpha_bars = np.cumprod(alphas)
    if not alpha_bars[-1] > 0.0:
        raise ValueError(
            f'alpha_bar_T must stay positive, got {alpha_bars[-1]} for T={T} '
            f'and beta_end={beta_end}'
        )

    # Equal endpoints give a constant schedule; alpha_bar still decreases
    if beta_start < beta_end and not np.all(np.diff(betas) > 0):
        raise ValueError(
            f'betas are not strictly increasing for T={T} between '
            f'{beta_start} and {beta_end}'
        )

    return NoiseSchedule(
        T=int(T), betas=betas, alphas=alphas, alpha_bars=alpha_bars, kind='linear'
    )


SCHEDULES: Dict[str, Callable[..., NoiseSchedule]] = {
    'linear': make_linear_schedule,
}


def make_schedule(
    kind: str = 'linear',
    T: int = DEFAULT_T,
    beta_start: float = DEFAULT_BETA_START,
    beta_end: float = DEFAULT_BETA_END,
) -> NoiseSchedule:
    """
    Build a schedule by family name.

    Raises:
        ValueError: If the family is not registered
    """
    if kind not in SCHEDULES:
        raise ValueError(
            f"Unknown schedule kind: '{kind}'. Supported kinds: {list(SCHEDULES.keys())}"
        )
    return SCHEDULES[kind](T=T, beta_start=beta_start, beta_end=beta_end)
