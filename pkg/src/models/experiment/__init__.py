from src.models.experiment.config import ExperimentConfig, load_config
from src.models.experiment.manifest import RunManifest, read_manifest, verify_manifest
from src.models.experiment.pipeline import ExperimentPipeline, run_experiment
