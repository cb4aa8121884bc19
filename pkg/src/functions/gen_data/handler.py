from src.functions import run_stage


def _summary(pipeline, dataset):
    split = dataset.split
    return {
        'dataset': str(pipeline.path('data', 'dataset.csv')),
        'n_samples': len(dataset.samples),
        'n_member': len(split.members),
        'n_d1': len(split.d1),
        'n_d2': len(split.d2),
        'n_test': len(split.test),
        'n_duplicated': len(dataset.duplicated),
        'warnings': list(split.warnings),
    }


def gen_data(event, context=None):
    """Generate and write the dataset with its member/non-member split."""
    return run_stage(event, 'gen_data', _summary)
