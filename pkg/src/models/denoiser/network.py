"""
Noise-prediction network eps_theta(x_t, t, c).

A fully-connected network: the input x_t is concatenated with a sinusoidal
timestep embedding (plus a learned per-token condition vector when the
architecture is conditional), followed by hidden layers with a smooth
nonlinearity and a linear output layer. Reverse-mode derivatives are written
out layer by layer.
"""

import copy
from dataclasses import dataclass, field
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from aws_lambda_powertools import Logger
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.special import expit

logger = Logger(service='denoiser')

COND_TABLE = 'cond_embedding'


class DenoiserArch(BaseModel):
    """
    Architecture descriptor.

    Args:
        input_dim (int): Data dimension d
        hidden (List[int]): Hidden layer widths
        embed_dim (int): Timestep (and condition) embedding size, even
        n_tokens (Optional[int]): Condition vocabulary size, None when unconditional
        T (int): Schedule length used to scale the timestep embedding
        activation (str): 'silu' or 'tanh'
        zero_init_output (bool): Start with a zero output layer
    """

    model_config = ConfigDict(extra='forbid', frozen=True)

    input_dim: int = Field(ge=1)
    hidden: Tuple[int, ...] = (128, 128)
    embed_dim: int = Field(default=16, ge=2)
    n_tokens: Optional[int] = Field(default=None, ge=1)
    T: int = Field(default=100, ge=1)
    activation: Literal['silu', 'tanh'] = 'silu'
    zero_init_output: bool = False

    @field_validator('hidden')
    @classmethod
    def _check_hidden(cls, value):
        if len(value) == 0 or any(int(w) < 1 for w in value):
            raise ValueError(f'hidden widths must be >= 1, got {value}')
        return tuple(int(w) for w in value)

    @field_validator('embed_dim')
    @classmethod
    def _check_embed_dim(cls, value):
        if value % 2:
            raise ValueError(f'embed_dim must be even, got {value}')
        return value

    @property
    def conditional(self) -> bool:
        return self.n_tokens is not None

    def layer_sizes(self) -> List[Tuple[int, int]]:
        widths = [self.input_dim + self.embed_dim, *self.hidden, self.input_dim]
        return list(zip(widths[:-1], widths[1:]))

    def param_shapes(self) -> Dict[str, Tuple[int, ...]]:
        shapes: Dict[str, Tuple[int, ...]] = {}
        for i, (fan_in, fan_out) in enumerate(self.layer_sizes()):
            shapes[f'layers.{i}.weight'] = (fan_in, fan_out)
            shapes[f'layers.{i}.bias'] = (fan_out,)
        if self.conditional:
            shapes[COND_TABLE] = (self.n_tokens, self.embed_dim)
        return shapes


def parameter_count(arch: DenoiserArch) -> int:
    """Total number of scalar parameters implied by the architecture."""
    return int(sum(np.prod(shape) for shape in arch.param_shapes().values()))


@dataclass
class Denoiser:
    """Named parameter arrays plus the architecture that explains them."""

    arch: DenoiserArch
    params: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        expected = self.arch.param_shapes()
        if set(expected) != set(self.params):
            raise ValueError(
                f'Parameter names {sorted(self.params)} do not match architecture '
                f'{sorted(expected)}'
            )
        for name, shape in expected.items():
            if tuple(self.params[name].shape) != shape:
                raise ValueError(
                    f'Parameter {name} has shape {self.params[name].shape}, '
                    f'architecture expects {shape}'
                )

    def predict(self, x_t: np.ndarray, t: Any, cond: Optional[Any] = None) -> np.ndarray:
        return forward(self, x_t, t, cond)

    def copy(self) -> 'Denoiser':
        return copy_denoiser(self)


def copy_denoiser(model: Denoiser) -> Denoiser:
    return Denoiser(
        arch=model.arch, params={k: v.copy() for k, v in model.params.items()}
    )


def init_denoiser(arch: DenoiserArch, seed: int) -> Denoiser:
    """
    Initialize weights from U(-1/sqrt(fan_in), 1/sqrt(fan_in)), deterministic in seed.

    Biases use the same bound; the condition table is N(0, 1) scaled by
    1/sqrt(embed_dim). Parameters are stored as float32.
    """
    rng = np.random.default_rng(seed)
    params: Dict[str, np.ndarray] = {}
    layers = arch.layer_sizes()
    for i, (fan_in, fan_out) in enumerate(layers):
        bound = 1.0 / np.sqrt(fan_in)
        weight = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        bias = rng.uniform(-bound, bound, size=(fan_out,))
        if arch.zero_init_output and i == len(layers) - 1:
            weight = np.zeros_like(weight)
            bias = np.zeros_like(bias)
        params[f'layers.{i}.weight'] = weight.astype(np.float32)
        params[f'layers.{i}.bias'] = bias.astype(np.float32)
    if arch.conditional:
        table = rng.standard_normal((arch.n_tokens, arch.embed_dim))
        params[COND_TABLE] = (table / np.sqrt(arch.embed_dim)).astype(np.float32)

    logger.debug(
        f'Initialized denoiser with {parameter_count(arch)} parameters (seed={seed})'
    )
    return Denoiser(arch=arch, params=params)


def _sinusoid(t: np.ndarray, dim: int, scale: float) -> np.ndarray:
    """Interleaved [sin(t*w_k), cos(t*w_k)] with w_k = scale ** (-k / (dim/2 - 1))."""
    half = dim // 2
    if half == 1:
        freqs = np.ones(1)
    else:
        freqs = scale ** (-np.arange(half) / (half - 1))
    angles = np.asarray(t, dtype=np.float64)[..., None] * freqs
    emb = np.empty(angles.shape[:-1] + (dim,))
    emb[..., 0::2] = np.sin(angles)
    emb[..., 1::2] = np.cos(angles)
    return emb


def timestep_embedding(t: Any, dim: int, T: int) -> np.ndarray:
    """
    Sinusoidal features of timestep t (scalar or array) with scale s = T.

    Frequencies run geometrically from 1 down to 1/T.

    Raises:
        ValueError: For odd dim or timesteps outside [1, T]
    """
    if dim < 2 or dim % 2:
        raise ValueError(f'Embedding dim must be an even positive integer, got {dim}')
    t_arr = np.asarray(t)
    if t_arr.size and (t_arr.min() < 1 or t_arr.max() > T):
        raise ValueError(f'Timestep {t} out of range [1, {T}]')
    return _sinusoid(t_arr, dim, float(max(T, 2)))


def _activation(name: str, z: np.ndarray) -> np.ndarray:
    if name == 'tanh':
        return np.tanh(z)
    return z * expit(z)


def _activation_grad(name: str, z: np.ndarray) -> np.ndarray:
    if name == 'tanh':
        return 1.0 - np.tanh(z) ** 2
    s = expit(z)
    return s + z * s * (1.0 - s)


def _prepare_inputs(
    model: Denoiser, x_t: np.ndarray, t: Any, cond: Optional[Any]
) -> Tuple[np.ndarray, np.ndarray, Optional[np.ndarray], bool]:
    arch = model.arch
    x = np.asarray(x_t, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != arch.input_dim:
        raise ValueError(
            f'Input shape {np.shape(x_t)} does not match model input_dim {arch.input_dim}'
        )
    n = x.shape[0]
    t_arr = np.broadcast_to(np.asarray(t, dtype=np.int64), (n,))

    tokens = None
    if cond is not None:
        if not arch.conditional:
            raise ValueError('Unconditional model received a condition token')
        tokens = np.broadcast_to(np.asarray(cond, dtype=np.int64), (n,))
        if tokens.min() < 0 or tokens.max() >= arch.n_tokens:
            raise ValueError(
                f'Unknown condition token in {np.unique(tokens).tolist()}; '
                f'vocabulary size is {arch.n_tokens}'
            )
    return x, t_arr, tokens, single


def _forward_cache(
    model: Denoiser, x: np.ndarray, t_arr: np.ndarray, tokens: Optional[np.ndarray]
) -> Tuple[np.ndarray, List[Tuple[np.ndarray, np.ndarray]]]:
    arch = model.arch
    emb = timestep_embedding(t_arr, arch.embed_dim, arch.T)
    if tokens is not None:
        emb = emb + model.params[COND_TABLE][tokens]
    h = np.concatenate([x, emb], axis=1)

    cache: List[Tuple[np.ndarray, np.ndarray]] = []
    n_layers = len(arch.layer_sizes())
    for i in range(n_layers):
        z = h @ model.params[f'layers.{i}.weight'] + model.params[f'layers.{i}.bias']
        cache.append((h, z))
        h = z if i == n_layers - 1 else _activation(arch.activation, z)
    return h, cache


def forward(
    model: Denoiser, x_t: np.ndarray, t: Any, cond: Optional[Any] = None
) -> np.ndarray:
    """
    Predict the noise in x_t.

    Args:
        model: Denoiser
        x_t: Array of shape (d,) or (n, d)
        t: Timestep, scalar or one per row
        cond: Condition token, scalar or one per row; None when unconditional

    Returns:
        Array with the same shape as x_t

    Raises:
        ValueError: On dimension mismatch or an unknown condition token
    """
    x, t_arr, tokens, single = _prepare_inputs(model, x_t, t, cond)
    out, _ = _forward_cache(model, x, t_arr, tokens)
    return out[0] if single else out


def loss_and_grads(
    model: Denoiser,
    x_t: np.ndarray,
    t: Any,
    cond: Optional[Any],
    target: np.ndarray,
) -> Tuple[float, Dict[str, np.ndarray]]:
    """
    Mean over the batch of ||target - eps_theta(x_t, t, c)||^2 and its exact gradients.

    `target` is a constant: no derivative flows into whatever produced it.

    Returns:
        (loss, grads) where grads has one float64 array per parameter
    """
    if np.shape(target) != np.shape(x_t):
        raise ValueError(
            f'Target shape {np.shape(target)} does not match batch {np.shape(x_t)}'
        )
    x, t_arr, tokens, _ = _prepare_inputs(model, x_t, t, cond)
    target = np.asarray(target, dtype=np.float64).reshape(x.shape)

    out, cache = _forward_cache(model, x, t_arr, tokens)
    n = x.shape[0]
    residual = out - target
    loss = float(np.sum(residual**2) / n)

    arch = model.arch
    grads: Dict[str, np.ndarray] = {}
    delta = 2.0 * residual / n
    n_layers = len(cache)
    for i in reversed(range(n_layers)):
        h_in, z = cache[i]
        if i != n_layers - 1:
            delta = delta * _activation_grad(arch.activation, z)
        grads[f'layers.{i}.weight'] = h_in.T @ delta
        grads[f'layers.{i}.bias'] = delta.sum(axis=0)
        delta = delta @ np.asarray(model.params[f'layers.{i}.weight'], dtype=np.float64).T

    if arch.conditional:
        table_grad = np.zeros(model.params[COND_TABLE].shape)
        if tokens is not None:
            np.add.at(table_grad, tokens, delta[:, arch.input_dim :])
        grads[COND_TABLE] = table_grad

    return loss, {name: grads[name] for name in model.params}


def is_conditional(model: Any) -> bool:
    """True for predictors whose architecture carries a condition table."""
    arch = getattr(model, 'arch', None)
    return bool(arch is not None and arch.conditional)
