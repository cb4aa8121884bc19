from src.functions import run_stage


def _summary(pipeline, manifest):
    return {
        'manifest': str(pipeline.path('manifest.json')),
        'status': manifest.status,
        'checkpoints': manifest.checkpoints,
        'attacks': {
            key: {'auc': record['auc'], 'tpr_at_1pct_fpr': record['tpr_at_1pct_fpr']}
            for key, record in manifest.metrics['attacks'].items()
        },
        'warnings': manifest.warnings,
        'timings': manifest.timings,
    }


def run_experiment(event, context=None):
    """Run every stage of one arm end to end and write its manifest."""
    return run_stage(event, 'run', _summary)
