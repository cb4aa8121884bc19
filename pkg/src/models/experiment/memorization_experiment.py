from pathlib import Path
from typing import Any, Dict, Optional, Sequence, Union

from aws_lambda_powertools import Logger

from src.models.experiment.config import ExperimentConfig
from src.models.experiment.pipeline import ExperimentPipeline
from src.shared.settings import settings
from src.shared.utils import atomic_write_json

logger = Logger(service='memorization-experiment')

MEMORIZATION_ARMS = ('none', 'distillmd', 'dualmd')
SUMMARY_NAME = 'memorization_summary.json'


def run_memorization_experiment(
    config: ExperimentConfig,
    arms: Sequence[str] = MEMORIZATION_ARMS,
    output_dir: Optional[Union[str, Path]] = None,
) -> Dict[str, Any]:
    """
    Run every arm on the same duplicated-sample dataset and summarize memorization.

    Per arm the summary holds the memorization fraction of the arm's primary
    sample pool and, where a white-box target exists, the t-error detection
    AUC of duplicated versus held-out samples.

    Raises:
        ValueError: If the dataset config has no duplication
    """
    if config.dataset.duplication is None:
        raise ValueError('Memorization experiment needs dataset.duplication')

    summary: Dict[str, Any] = {
        'experiment': config.name,
        'seed': config.seed,
        'duplication': config.dataset.duplication.model_dump(),
        'iterations': config.train.iterations,
        'arms': {},
    }
    root = settings.get_run_dir(config.name, config.seed, output_dir=output_dir or config.output_path)
    for arm in arms:
        pipeline = ExperimentPipeline(config.for_defense(arm), root / arm)
        manifest = pipeline.run()
        memorization = manifest.metrics['memorization']
        primary = pipeline.pool_names[0]
        summary['arms'][arm] = {
            'memorization_fraction': memorization['fraction'][primary],
            'pool': primary,
            'eps': memorization['eps'],
            'detection_auc': {
                name: record['auc'] for name, record in memorization.get('detection', {}).items()
            },
            'manifest': str(pipeline.run_dir / 'manifest.json'),
        }
        logger.info(
            f'Arm {arm}: memorization fraction {summary["arms"][arm]["memorization_fraction"]:.4f}'
        )

    path = atomic_write_json(root / SUMMARY_NAME, summary)
    summary['path'] = str(path)
    return summary
