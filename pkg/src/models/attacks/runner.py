from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence

import numpy as np
from aws_lambda_powertools import Logger

from src.models.attacks import AttackScores, BaseAttack
from src.shared.settings import settings

logger = Logger(service='attack-runner')


def _score_all(
    scorer: BaseAttack, samples: Sequence, seed: int, threads: int
) -> List[float]:
    # Generator i depends only on (seed, i), so thread count never changes results.
    def task(i: int) -> float:
        return float(scorer.score(samples[i], np.random.default_rng([int(seed), i])))

    if threads > 1 and len(samples) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(task, range(len(samples))))
    return [task(i) for i in range(len(samples))]


def run_attack(
    scorer: BaseAttack,
    member_set: Sequence,
    nonmember_set: Sequence,
    seed: int = 0,
    threads: Optional[int] = None,
) -> AttackScores:
    """
    Score every member and non-member sample.

    Args:
        scorer (BaseAttack): Attack to apply
        member_set: Samples labelled as members
        nonmember_set: Samples labelled as non-members
        seed (int): Base seed; sample i of either set uses the stream (seed, i)
        threads (Optional[int]): Worker threads, settings.threads when None

    Returns:
        AttackScores: Scores in input order with the scorer's orientation and params

    Raises:
        ValueError: If a set is empty or a score is not finite
    """
    if len(member_set) == 0 or len(nonmember_set) == 0:
        raise ValueError('Attack needs nonempty member and non-member sets')
    threads = settings.threads if threads is None else int(threads)

    scorer.ensamble['status'] = 'in_progress'
    member_scores = _score_all(scorer, member_set, seed, threads)
    nonmember_scores = _score_all(scorer, nonmember_set, seed, threads)
    for label, scores in (('member', member_scores), ('non-member', nonmember_scores)):
        bad = [i for i, v in enumerate(scores) if not np.isfinite(v)]
        if bad:
            scorer.ensamble['status'] = 'failed'
            scorer.ensamble['status_reason'] = f'non-finite {label} scores'
            raise ValueError(
                f'Attack {scorer.name} produced non-finite {label} scores at {bad}'
            )

    scorer.ensamble['status'] = 'completed'
    scorer.ensamble['stats']['scored'] += len(member_scores) + len(nonmember_scores)
    logger.info(
        f'Attack {scorer.name}: scored {len(member_scores)} members and '
        f'{len(nonmember_scores)} non-members'
    )
    return AttackScores(
        attack=scorer.name,
        orientation=scorer.orientation,
        params={**scorer.params, 'seed': int(seed)},
        member_scores=member_scores,
        nonmember_scores=nonmember_scores,
    )
