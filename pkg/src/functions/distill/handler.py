from src.functions import run_stage


def _summary(pipeline, student):
    return {
        'checkpoint': str(pipeline.path('checkpoints', 'student.ckpt')),
        'training': pipeline.ensamble['metrics']['training']['student'],
    }


def distill(event, context=None):
    """Distill the student from the two disjoint teachers (defense 'distillmd' only)."""
    return run_stage(event, 'distill', _summary)
