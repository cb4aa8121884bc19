from src.models.sampling.sample_io import read_samples, write_samples
from src.models.sampling.sampler import (
    SamplerPlan,
    TrajectorySampler,
    dual_sample,
    sample_per_condition,
    single_sample,
    timestep_sequence,
)
