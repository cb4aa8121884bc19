"""ROC analysis of AttackScores: AUC, TPR at a fixed FPR and the ROC points."""

from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field
from scipy.stats import rankdata
from sklearn.metrics import roc_curve

from src.models.attacks import LOWER_MEANS_MEMBER, AttackScores
from src.shared.utils import atomic_write_csv, atomic_write_json

DEFAULT_FPR_CAP = 0.01
FPR_TOLERANCE = 1e-12


class RocReport(BaseModel):
    """
    Summary of one member/non-member separation.

    Args:
        auc (float): Probability a member outranks a non-member, ties count 1/2
        tpr_at_1pct_fpr (float): Best TPR with empirical FPR <= 1%
        roc_points (List[Tuple[float, float]]): (fpr, tpr) from (0, 0) to (1, 1)
        n_member / n_nonmember (int): Set sizes
    """

    model_config = ConfigDict(extra='forbid')

    attack: Optional[str] = None
    auc: float = Field(ge=0, le=1)
    tpr_at_1pct_fpr: float = Field(ge=0, le=1)
    roc_points: List[Tuple[float, float]]
    n_member: int = Field(ge=1)
    n_nonmember: int = Field(ge=1)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.roc_points, columns=['fpr', 'tpr'])


def oriented_scores(scores: AttackScores) -> Tuple[np.ndarray, np.ndarray]:
    """
    Member and non-member scores flipped so that higher means member.

    Raises:
        ValueError: On empty or non-finite score lists
    """
    member = np.asarray(scores.member_scores, dtype=np.float64)
    nonmember = np.asarray(scores.nonmember_scores, dtype=np.float64)
    if member.size == 0 or nonmember.size == 0:
        raise ValueError('Score lists must be nonempty')
    if not (np.all(np.isfinite(member)) and np.all(np.isfinite(nonmember))):
        raise ValueError(f'Non-finite scores in attack {scores.attack}')
    if scores.orientation == LOWER_MEANS_MEMBER:
        return -member, -nonmember
    return member, nonmember


def _labels_and_scores(scores: AttackScores) -> Tuple[np.ndarray, np.ndarray]:
    member, nonmember = oriented_scores(scores)
    labels = np.concatenate([np.ones(member.size), np.zeros(nonmember.size)])
    return labels, np.concatenate([member, nonmember])


def auc(scores: AttackScores) -> float:
    """Rank (Mann-Whitney) AUC under the declared orientation, ties counted 1/2."""
    member, nonmember = oriented_scores(scores)
    ranks = rankdata(np.concatenate([member, nonmember]))
    n_m, n_n = member.size, nonmember.size
    u_stat = ranks[:n_m].sum() - n_m * (n_m + 1) / 2.0
    return float(u_stat / (n_m * n_n))


def roc_points(scores: AttackScores) -> List[Tuple[float, float]]:
    """Step ROC over every distinct threshold, from (0, 0) to (1, 1)."""
    labels, values = _labels_and_scores(scores)
    fpr, tpr, _ = roc_curve(labels, values, drop_intermediate=False)
    return [(float(f), float(t)) for f, t in zip(fpr, tpr)]


def tpr_at_fpr(scores: AttackScores, fpr_cap: float = DEFAULT_FPR_CAP) -> float:
    """
    Largest TPR among thresholds whose empirical FPR is at most fpr_cap.

    No interpolation between attainable FPR values.

    Raises:
        ValueError: If fpr_cap lies outside [0, 1]
    """
    if not 0.0 <= fpr_cap <= 1.0:
        raise ValueError(f'fpr_cap must lie in [0, 1], got {fpr_cap}')
    points = np.asarray(roc_points(scores))
    admissible = points[points[:, 0] <= fpr_cap + FPR_TOLERANCE]
    return float(admissible[:, 1].max())


def roc_report(scores: AttackScores, fpr_cap: float = DEFAULT_FPR_CAP) -> RocReport:
    return RocReport(
        attack=scores.attack,
        auc=auc(scores),
        tpr_at_1pct_fpr=tpr_at_fpr(scores, fpr_cap),
        roc_points=roc_points(scores),
        n_member=len(scores.member_scores),
        n_nonmember=len(scores.nonmember_scores),
    )


def write_roc_csv(report: RocReport, path: Union[str, Path]) -> Path:
    return atomic_write_csv(path, report.to_frame())


def write_roc_json(report: RocReport, path: Union[str, Path]) -> Path:
    return atomic_write_json(path, report.model_dump(mode='json'))
