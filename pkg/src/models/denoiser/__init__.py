from src.models.denoiser.checkpoint import load_checkpoint, save_checkpoint
from src.models.denoiser.network import (
    Denoiser,
    DenoiserArch,
    copy_denoiser,
    forward,
    init_denoiser,
    is_conditional,
    loss_and_grads,
    parameter_count,
    timestep_embedding,
)
from src.models.denoiser.optimizer import OptimizerState, adam_update, init_optimizer
