import copy
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

from aws_lambda_powertools import Logger
from pydantic import BaseModel, ConfigDict

from src.shared.settings import SCHEMA_DIR
from src.shared.utils import atomic_write_json, canonical_json, file_hash

logger = Logger(service='manifest')

MANIFEST_NAME = 'manifest.json'
MANIFEST_FORMAT_VERSION = 1

# Load run manifest template
with open(SCHEMA_DIR / 'run_manifest_schema.json', 'r') as f:
    MANIFEST_TEMPLATE = json.load(f)


class RunManifest(BaseModel):
    """
    Record of one experiment arm.

    `metrics` holds only values that are reproducible from the config;
    wall-clock data lives in `timings`.
    """

    model_config = ConfigDict(extra='forbid')

    format_version: int
    status: Literal['running', 'completed', 'failed']
    error: Optional[str] = None
    experiment: str
    defense: str
    seed: int
    config: Dict[str, Any]
    artifacts: Dict[str, str]
    checkpoints: Dict[str, str]
    sampler: Dict[str, Any]
    metrics: Dict[str, Any]
    warnings: List[str]
    skipped_attacks: List[str]
    timings: Dict[str, float]

    def metrics_json(self) -> str:
        return canonical_json(self.metrics)


def new_manifest(config: Dict[str, Any], experiment: str, defense: str, seed: int) -> RunManifest:
    payload = copy.deepcopy(MANIFEST_TEMPLATE)
    payload.update(
        {
            'format_version': MANIFEST_FORMAT_VERSION,
            'experiment': experiment,
            'defense': defense,
            'seed': seed,
            'config': config,
        }
    )
    return RunManifest.model_validate(payload)


def collect_artifacts(run_dir: Union[str, Path]) -> Dict[str, str]:
    """Git-style hash of every file under run_dir (manifest excluded), keyed by relative path."""
    run_dir = Path(run_dir)
    artifacts: Dict[str, str] = {}
    for path in sorted(p for p in run_dir.rglob('*') if p.is_file()):
        relative = path.relative_to(run_dir).as_posix()
        if relative == MANIFEST_NAME or path.name.startswith('.'):
            continue
        artifacts[relative] = file_hash(path)
    return artifacts


def write_manifest(manifest: RunManifest, run_dir: Union[str, Path]) -> Path:
    path = atomic_write_json(Path(run_dir) / MANIFEST_NAME, manifest.model_dump(mode='json'))
    logger.info(f'Manifest written ({manifest.status}): {path}')
    return path


def read_manifest(path: Union[str, Path]) -> RunManifest:
    """
    Load a manifest file or the manifest of a run directory.

    Raises:
        ValueError: On a format version other than the current one
    """
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST_NAME
    payload = json.loads(path.read_text())
    version = payload.get('format_version')
    if version != MANIFEST_FORMAT_VERSION:
        raise ValueError(
            f'Manifest {path} has format version {version}, '
            f'expected {MANIFEST_FORMAT_VERSION}'
        )
    return RunManifest.model_validate(payload)


def verify_manifest(path: Union[str, Path]) -> RunManifest:
    """
    Re-hash every artifact listed in a manifest.

    Raises:
        ValueError: If an artifact is missing or its content changed
    """
    path = Path(path)
    run_dir = path if path.is_dir() else path.parent
    manifest = read_manifest(path)
    for relative, expected in manifest.artifacts.items():
        artifact = run_dir / relative
        if not artifact.exists():
            raise ValueError(f'Artifact missing: {relative}')
        actual = file_hash(artifact)
        if actual != expected:
            raise ValueError(
                f'Artifact {relative} was modified: hash {actual}, manifest has {expected}'
            )
    logger.info(f'Verified {len(manifest.artifacts)} artifacts of {run_dir}')
    return manifest
