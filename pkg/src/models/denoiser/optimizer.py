"""Adaptive-moment (Adam) updates for Denoiser parameters."""

from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from src.models.denoiser.network import Denoiser

DEFAULT_LEARNING_RATE = 2e-4
DEFAULT_BETA1 = 0.9
DEFAULT_BETA2 = 0.999
DEFAULT_EPSILON = 1e-8


@dataclass
class OptimizerState:
    """
    First/second moments per parameter plus the step counter.

    Args:
        m (Dict[str, np.ndarray]): First moments
        v (Dict[str, np.ndarray]): Second moments
        step (int): Number of updates applied so far
    """

    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    learning_rate: float = DEFAULT_LEARNING_RATE
    beta1: float = DEFAULT_BETA1
    beta2: float = DEFAULT_BETA2
    epsilon: float = DEFAULT_EPSILON


def init_optimizer(
    model: Denoiser,
    learning_rate: float = DEFAULT_LEARNING_RATE,
    beta1: float = DEFAULT_BETA1,
    beta2: float = DEFAULT_BETA2,
    epsilon: float = DEFAULT_EPSILON,
) -> OptimizerState:
    """Zero moments shaped like the model parameters."""
    if learning_rate <= 0:
        raise ValueError(f'learning_rate must be positive, got {learning_rate}')
    if not (0 <= beta1 < 1 and 0 <= beta2 < 1):
        raise ValueError(f'Moment decays must lie in [0, 1), got {beta1}, {beta2}')
    return OptimizerState(
        m={k: np.zeros(p.shape) for k, p in model.params.items()},
        v={k: np.zeros(p.shape) for k, p in model.params.items()},
        step=0,
        learning_rate=learning_rate,
        beta1=beta1,
        beta2=beta2,
        epsilon=epsilon,
    )


def adam_update(
    model: Denoiser, grads: Dict[str, np.ndarray], state: OptimizerState
) -> Tuple[Denoiser, OptimizerState]:
    """
    Apply one bias-corrected Adam step.

    Returns new (model, state) values; the inputs are left untouched.

    Raises:
        ValueError: If a gradient is missing or its shape differs from the parameter
    """
    step = state.step + 1
    b1, b2 = state.beta1, state.beta2
    correction1 = 1.0 - b1**step
    correction2 = 1.0 - b2**step

    new_params: Dict[str, np.ndarray] = {}
    new_m: Dict[str, np.ndarray] = {}
    new_v: Dict[str, np.ndarray] = {}
    for name, param in model.params.items():
        if name not in grads:
            raise ValueError(f'Missing gradient for parameter {name}')
        grad = np.asarray(grads[name], dtype=np.float64)
        if grad.shape != param.shape:
            raise ValueError(
                f'Gradient for {name} has shape {grad.shape}, parameter has {param.shape}'
            )
        m = b1 * state.m[name] + (1.0 - b1) * grad
        v = b2 * state.v[name] + (1.0 - b2) * grad**2
        m_hat = m / correction1
        v_hat = v / correction2
        update = state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
        new_params[name] = (param.astype(np.float64) - update).astype(param.dtype)
        new_m[name] = m
        new_v[name] = v

    new_state = OptimizerState(
        m=new_m,
        v=new_v,
        step=step,
        learning_rate=state.learning_rate,
        beta1=b1,
        beta2=b2,
        epsilon=state.epsilon,
    )
    return Denoiser(arch=model.arch, params=new_params), new_state
