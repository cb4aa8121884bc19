from src.functions import run_stage


def _summary(pipeline, results):
    return {
        'attacks': {
            key: {
                'path': str(pipeline.path('attacks', f'{key}.json')),
                'orientation': scores.orientation,
                'n_member': len(scores.member_scores),
                'n_nonmember': len(scores.nonmember_scores),
            }
            for key, scores in results.items()
        },
        'skipped_attacks': pipeline.ensamble['skipped_attacks'],
    }


def attack(event, context=None):
    """Score members and non-members with every configured attack."""
    return run_stage(event, 'attack', _summary)
