from src.models.diffusion.process import (
    NoisePredictor,
    ancestral_step,
    compose_denoise,
    compose_reverse,
    ddim_denoise_step,
    ddim_reverse_step,
    ddim_transfer,
    diffuse,
    draw_normal,
    posterior_mean,
    predict_noise_from_x0,
    predict_x0,
)
from src.models.diffusion.schedule import NoiseSchedule, make_linear_schedule, make_schedule
