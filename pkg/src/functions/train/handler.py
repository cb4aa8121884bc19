from src.functions import run_stage


def _summary(pipeline, models):
    return {
        'checkpoints': {
            name: str(pipeline.path('checkpoints', f'{name}.ckpt')) for name in models
        },
        'training': {
            name: pipeline.ensamble['metrics']['training'][name] for name in models
        },
    }


def train(event, context=None):
    """Train the baseline model, or both disjoint models under a defense."""
    return run_stage(event, 'train', _summary)
