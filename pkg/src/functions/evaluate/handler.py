from src.functions import run_stage


def _summary(pipeline, metrics):
    # A standalone evaluation closes the run with its own manifest.
    manifest = pipeline.finalize('completed')
    return {
        'manifest': str(pipeline.path('manifest.json')),
        'status': manifest.status,
        'attacks': {
            key: {'auc': record['auc'], 'tpr_at_1pct_fpr': record['tpr_at_1pct_fpr']}
            for key, record in metrics['attacks'].items()
        },
        'quality': metrics['quality'],
        'memorization': metrics['memorization'],
        'generalization': metrics['generalization'],
    }


def evaluate(event, context=None):
    """Compute ROC reports, quality, memorization and generalization metrics."""
    return run_stage(event, 'evaluate', _summary)
