"""Comparison tables across run manifests (arm x attack)."""

from pathlib import Path
from typing import Dict, List, Sequence, Union

import numpy as np
import pandas as pd
from aws_lambda_powertools import Logger

from src.models.experiment.manifest import MANIFEST_NAME, read_manifest
from src.shared.utils import atomic_write_csv, atomic_write_text

logger = Logger(service='report')

REPORT_COLUMNS = [
    'experiment',
    'seed',
    'defense',
    'attack',
    'auc',
    'tpr_at_1pct_fpr',
    'energy_distance',
    'memorization_fraction',
    'roc_csv',
]
SUMMARY_METRICS = ['auc', 'tpr_at_1pct_fpr', 'energy_distance', 'memorization_fraction']
PRIMARY_POOL = {'none': 'baseline', 'distillmd': 'student', 'dualmd': 'dual'}


def attack_kind(key: str) -> str:
    """'blackbox@theta1' -> 'blackbox'."""
    return key.split('@')[0]


def _pool_of(defense: str, key: str) -> str:
    return key.split('@')[1] if '@' in key else PRIMARY_POOL.get(defense, '')


def report_frame(manifest_paths: Sequence[Union[str, Path]]) -> pd.DataFrame:
    """
    One row per (manifest, attack).

    Raises:
        ValueError: With no manifests, a format-version mismatch, a missing
            ROC CSV, or arms of one experiment/seed trained on different budgets
    """
    if len(manifest_paths) == 0:
        raise ValueError('Report needs at least one manifest')
    rows: List[Dict[str, object]] = []
    budgets: Dict[tuple, Dict[str, int]] = {}
    for raw_path in manifest_paths:
        path = Path(raw_path)
        run_dir = path if path.is_dir() else path.parent
        manifest = read_manifest(path if not path.is_dir() else path / MANIFEST_NAME)
        group = (manifest.experiment, manifest.seed)
        budgets.setdefault(group, {})[manifest.defense] = manifest.config['train']['iterations']

        metrics = manifest.metrics
        quality = metrics.get('quality', {})
        fractions = metrics.get('memorization', {}).get('fraction', {})
        for key, attack in (metrics.get('attacks') or {'': {}}).items():
            roc_csv = attack.get('roc_csv')
            if roc_csv and not (run_dir / roc_csv).exists():
                raise ValueError(f'ROC CSV {roc_csv} referenced by {path} is missing')
            pool = _pool_of(manifest.defense, key)
            rows.append(
                {
                    'experiment': manifest.experiment,
                    'seed': manifest.seed,
                    'defense': manifest.defense,
                    'attack': key,
                    'auc': attack.get('auc', np.nan),
                    'tpr_at_1pct_fpr': attack.get('tpr_at_1pct_fpr', np.nan),
                    'energy_distance': quality.get(pool, {}).get('energy_distance', np.nan),
                    'memorization_fraction': fractions.get(pool, np.nan),
                    'roc_csv': str(run_dir / roc_csv) if roc_csv else '',
                }
            )

    for (experiment, seed), arms in budgets.items():
        if len(set(arms.values())) > 1:
            raise ValueError(
                f'Budget parity violated for {experiment} seed {seed}: iterations {arms}'
            )
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def aggregate_seeds(frame: pd.DataFrame) -> pd.DataFrame:
    """Mean and standard deviation over seeds per (experiment, defense, attack)."""
    grouped = frame.groupby(['experiment', 'defense', 'attack'], sort=False)
    summary = grouped[SUMMARY_METRICS].agg(['mean', 'std'])
    summary.columns = [f'{metric}_{stat}' for metric, stat in summary.columns]
    summary['n_seeds'] = grouped['seed'].nunique()
    return summary.reset_index()


def _closest_to_half(frame: pd.DataFrame, column: str) -> pd.Series:
    """True for the row(s) whose AUC is closest to 0.5 among rows of the same attack kind."""
    distance = (frame[column] - 0.5).abs()
    kinds = frame['attack'].map(attack_kind)
    best = distance.groupby([frame['experiment'], kinds]).transform('min')
    return distance.notna() & np.isclose(distance, best)


def _format(value: object) -> str:
    if isinstance(value, (float, np.floating)):
        return '' if np.isnan(value) else f'{value:.4f}'
    return str(value)


def to_markdown(frame: pd.DataFrame, auc_column: str = 'auc') -> str:
    """Pipe table; the AUC closest to 0.5 per experiment and attack kind is bold."""
    highlight = _closest_to_half(frame, auc_column) if len(frame) else pd.Series([], dtype=bool)
    lines = [
        '| ' + ' | '.join(frame.columns) + ' |',
        '|' + '|'.join('---' for _ in frame.columns) + '|',
    ]
    for i, row in frame.iterrows():
        cells = []
        for column in frame.columns:
            text = _format(row[column])
            if column == auc_column and highlight.loc[i] and text:
                text = f'**{text}**'
            cells.append(text)
        lines.append('| ' + ' | '.join(cells) + ' |')
    return '\n'.join(lines) + '\n'


def build_report(
    manifest_paths: Sequence[Union[str, Path]], output_dir: Union[str, Path]
) -> Dict[str, object]:
    """
    Write report.csv, report_summary.csv and report.md into output_dir.

    Returns:
        Dict with the row and summary frames plus the written paths
    """
    output_dir = Path(output_dir)
    frame = report_frame(manifest_paths)
    summary = aggregate_seeds(frame)
    paths = {
        'csv': atomic_write_csv(output_dir / 'report.csv', frame),
        'summary_csv': atomic_write_csv(output_dir / 'report_summary.csv', summary),
        'markdown': atomic_write_text(
            output_dir / 'report.md',
            '## Runs\n\n'
            + to_markdown(frame.drop(columns=['roc_csv']))
            + '\n## Mean over seeds\n\n'
            + to_markdown(summary, auc_column='auc_mean'),
        ),
    }
    logger.info(f'Report over {len(manifest_paths)} manifest(s) written to {output_dir}')
    return {'rows': frame, 'summary': summary, 'paths': paths}
