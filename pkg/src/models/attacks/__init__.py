import math
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

LOWER_MEANS_MEMBER = 'lower-means-member'
HIGHER_MEANS_MEMBER = 'higher-means-member'

Orientation = Literal['lower-means-member', 'higher-means-member']


class AttackScores(BaseModel):
    """
    Member and non-member scores of one attack run.

    Serialized as {attack, orientation, params, member_scores, nonmember_scores}.
    """

    model_config = ConfigDict(extra='forbid')

    attack: str
    orientation: Orientation
    params: Dict[str, Any] = {}
    member_scores: List[float]
    nonmember_scores: List[float]

    @field_validator('member_scores', 'nonmember_scores')
    @classmethod
    def _check_scores(cls, value):
        if len(value) == 0:
            raise ValueError('Score lists must be nonempty')
        bad = [i for i, v in enumerate(value) if not math.isfinite(v)]
        if bad:
            raise ValueError(f'Non-finite scores at positions {bad}')
        return value

    def swapped(self) -> 'AttackScores':
        return self.model_copy(
            update={
                'member_scores': list(self.nonmember_scores),
                'nonmember_scores': list(self.member_scores),
            }
        )


class BaseAttack(ABC):
    """
    A membership scorer: one float per candidate sample.

    Subclasses set `name` and `orientation` and expose their parameters
    through `params` so runs can be reproduced from the manifest.
    """

    name: str = ''
    orientation: str = LOWER_MEANS_MEMBER

    def __init__(self):
        self.ensamble = {'status': 'pending', 'status_reason': '', 'stats': {'scored': 0}}

    @property
    @abstractmethod
    def params(self) -> Dict[str, Any]:
        pass

    @abstractmethod
    def score(self, sample, rng: np.random.Generator) -> float:
        pass
