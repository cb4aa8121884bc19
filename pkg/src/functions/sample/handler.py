from src.functions import run_stage


def _summary(pipeline, pools):
    return {
        'pools': {
            name: {
                'path': str(pipeline.path('samples', f'{name}.bin')),
                'n_samples': int(samples.shape[0]),
            }
            for name, samples in pools.items()
        },
        'sampler': pipeline.ensamble['sampler'],
    }


def sample(event, context=None):
    """Generate the sample pools of the configured arm."""
    return run_stage(event, 'sample', _summary)
