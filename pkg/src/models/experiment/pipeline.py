"""
Orchestration of one experiment arm.

Stages run in order gen_data -> train -> distill -> sample -> attack -> evaluate.
Each stage writes its artifacts under the run directory and reloads the
artifacts of earlier stages when it runs on its own, so every CLI subcommand
maps to one stage. Stage seeds come from `derive_seed(master, stage, index)`.

Run directory layout:
    data/dataset.csv
    checkpoints/<model>.ckpt     traces/<model>.csv
    samples/<pool>.bin (+ .json sidecar)
    attacks/<key>.json           roc/<key>.csv
    manifest.json
"""

import copy
import math
import time
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from aws_lambda_powertools import Logger

from src.models.attacks import AttackScores
from src.models.attacks.blackbox_attack import BlackBoxAttack
from src.models.attacks.loss_attack import LossAttack
from src.models.attacks.runner import run_attack
from src.models.attacks.secmi_attack import SecMIAttack, sweep_secmi
from src.models.datasets.generators import (
    GeneratedDataset,
    class_tokens,
    gen_dataset,
    read_dataset,
    write_dataset,
)
from src.models.denoiser.checkpoint import load_checkpoint, save_checkpoint
from src.models.denoiser.network import Denoiser, init_denoiser
from src.models.experiment.config import AttackSpec, ExperimentConfig
from src.models.experiment.manifest import (
    MANIFEST_TEMPLATE,
    RunManifest,
    collect_artifacts,
    new_manifest,
    write_manifest,
)
from src.models.metrics.memorization import (
    default_memorization_eps,
    memorization_detection,
    memorization_fraction,
)
from src.models.metrics.quality import energy_distance
from src.models.metrics.roc import roc_report, write_roc_csv
from src.models.sampling.sample_io import read_samples, write_samples
from src.models.sampling.sampler import TrajectorySampler
from src.models.training.ddpm_trainer import DDPMTrainer
from src.models.training.distillation_trainer import DistillationTrainer
from src.models.training.generalization import generalization_gap_estimate
from src.models.training.splits import stack_x0
from src.shared.settings import settings
from src.shared.utils import atomic_write_json, derive_seed, file_hash

logger = Logger(service='pipeline')

MODEL_INDEX = {'baseline': 0, 'theta1': 1, 'theta2': 2, 'student': 3}
STAGES = ('gen_data', 'train', 'distill', 'sample', 'attack', 'evaluate')


class ExperimentPipeline:
    """
    Runs the stages of one defense arm.

    Args:
        config (ExperimentConfig): Validated experiment config
        run_dir (Optional[Path]): Override of the run directory
    """

    def __init__(self, config: ExperimentConfig, run_dir: Optional[Union[str, Path]] = None):
        self.config = config
        self.run_dir = (
            Path(run_dir)
            if run_dir
            else settings.get_run_dir(config.name, config.seed, config.defense, config.output_path)
        )
        self.sched = config.train.schedule.build()
        self.arch = config.build_arch()
        self._dataset: Optional[GeneratedDataset] = None
        self._models: Dict[str, Denoiser] = {}
        self._pools: Dict[str, Tuple[np.ndarray, Optional[np.ndarray]]] = {}
        self.ensamble = {
            'status': 'pending',
            'status_reason': '',
            'metrics': copy.deepcopy(MANIFEST_TEMPLATE['metrics']),
            'sampler': {},
            'warnings': [],
            'skipped_attacks': [],
            'timings': {},
        }

    # Layout helpers
    def path(self, *parts: str) -> Path:
        return self.run_dir.joinpath(*parts)

    def seed_for(self, stage: str, index: int = 0) -> int:
        return derive_seed(self.config.seed, stage, index)

    @property
    def defense(self) -> str:
        return self.config.defense

    @property
    def trained_models(self) -> List[str]:
        return ['baseline'] if self.defense == 'none' else ['theta1', 'theta2']

    @property
    def white_box_targets(self) -> List[str]:
        """Models exposed to white-box attacks; DualMD only exposes its sampler."""
        return {'none': ['baseline'], 'distillmd': ['student'], 'dualmd': []}[self.defense]

    @property
    def pool_names(self) -> List[str]:
        return {
            'none': ['baseline'],
            'distillmd': ['student'],
            'dualmd': ['dual', 'theta1', 'theta2'],
        }[self.defense]

    # Lazy loaders for standalone stages
    @property
    def dataset(self) -> GeneratedDataset:
        if self._dataset is None:
            path = self.path('data', 'dataset.csv')
            if not path.exists():
                raise ValueError(f'Dataset not found at {path}; run gen-data first')
            self._dataset = read_dataset(path)
        return self._dataset

    def model(self, name: str) -> Denoiser:
        if name not in self._models:
            path = self.path('checkpoints', f'{name}.ckpt')
            if not path.exists():
                raise ValueError(f'Checkpoint {name} not found at {path}')
            self._models[name] = load_checkpoint(path, expected_arch=self.arch)
        return self._models[name]

    def pool(self, name: str) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        if name not in self._pools:
            path = self.path('samples', f'{name}.bin')
            if not path.exists():
                raise ValueError(f'Sample pool {name} not found at {path}; run sample first')
            samples, meta = read_samples(path)
            cond = meta.get('cond')
            self._pools[name] = (
                samples.astype(np.float64),
                None if cond is None else np.asarray(cond, dtype=np.int64),
            )
        return self._pools[name]

    # Stages
    def gen_data(self) -> GeneratedDataset:
        dataset = gen_dataset(self.config.dataset, self.config.seed)
        write_dataset(dataset, self.path('data', 'dataset.csv'))
        self.ensamble['warnings'].extend(dataset.split.warnings)
        # Reload from disk so staged and end-to-end runs see the same values.
        self._dataset = read_dataset(self.path('data', 'dataset.csv'))
        return self._dataset

    def train(self) -> Dict[str, Denoiser]:
        split = self.dataset.split
        subsets = {'baseline': split.members, 'theta1': split.d1, 'theta2': split.d2}
        for name in self.trained_models:
            index = MODEL_INDEX[name]
            model = init_denoiser(self.arch, self.seed_for('init', index))
            rng = np.random.default_rng([self.config.train.seed, self.seed_for('train', index)])
            trainer = DDPMTrainer(self.sched, self.config.train, name=name)
            model = trainer.fit(model, subsets[name], rng)
            self._save_model(name, model, trainer)
        return {name: self._models[name] for name in self.trained_models}

    def distill(self) -> Denoiser:
        if self.defense != 'distillmd':
            raise ValueError(f"distill stage requires defense 'distillmd', got '{self.defense}'")
        index = MODEL_INDEX['student']
        student = init_denoiser(self.arch, self.seed_for('init', index))
        rng = np.random.default_rng([self.config.train.seed, self.seed_for('distill', index)])
        trainer = DistillationTrainer(self.sched, self.config.train)
        student = trainer.fit(
            self.model('theta1'), self.model('theta2'), self.dataset.split, student, rng
        )
        self._save_model('student', student, trainer)
        stats = trainer.ensamble['stats']
        self.ensamble['metrics']['training']['student'].update(
            {
                'batches_from_d1': stats['batches_from_d1'],
                'batches_from_d2': stats['batches_from_d2'],
            }
        )
        return student

    def sample(self) -> Dict[str, np.ndarray]:
        cond = self._generation_tokens()
        n_samples = self.config.sampler.n_samples if cond is None else len(cond)
        seed = self.seed_for('sample')
        for name in self.pool_names:
            if name == 'dual':
                models, mode = [self.model('theta1'), self.model('theta2')], 'dual'
            else:
                models, mode = [self.model(name)], 'single'
            plan = self.config.sampler_plan(mode, seed, n_samples)
            sampler = TrajectorySampler(self.sched, plan)
            samples = sampler.run(models, cond=cond)

            sources = ['theta1', 'theta2'] if name == 'dual' else [name]
            sidecar = {
                'pool': name,
                'plan': plan.model_dump(mode='json'),
                'seeds': {'master': self.config.seed, 'sample': seed},
                'models': sources,
                'checkpoint_hashes': {
                    src: file_hash(self.path('checkpoints', f'{src}.ckpt')) for src in sources
                },
                'model_steps': sampler.ensamble['stats']['model_steps'],
                'cond': None if cond is None else cond.tolist(),
            }
            write_samples(self.path('samples', f'{name}.bin'), samples, sidecar)
            self._pools[name] = (samples.astype(np.float32).astype(np.float64), cond)
            if name == 'dual':
                self.ensamble['sampler'] = {
                    'plan': plan.model_dump(mode='json'),
                    'model_a': 'theta1',
                    'model_b': 'theta2',
                    'model_steps': sampler.ensamble['stats']['model_steps'],
                }
        if not self.ensamble['sampler']:
            self.ensamble['sampler'] = {'plan': plan.model_dump(mode='json')}
        return {name: self._pools[name][0] for name in self.pool_names}

    def attack(self) -> Dict[str, AttackScores]:
        split = self.dataset.split
        members, nonmembers = split.members, split.test
        results: Dict[str, AttackScores] = {}
        for i, spec in enumerate(self.config.attacks):
            seed = self.seed_for('attack', i)
            if spec.white_box:
                if not self.white_box_targets:
                    message = f'{spec.kind} skipped: no white-box target under {self.defense}'
                    logger.warning(message)
                    self.ensamble['warnings'].append(message)
                    self.ensamble['skipped_attacks'].append(spec.kind)
                    continue
                for name in self.white_box_targets:
                    scores = self._white_box_scores(spec, self.model(name), members, nonmembers, seed)
                    results[self._attack_key(spec.kind, None, results)] = scores
            else:
                for name in self.pool_names:
                    generated, cond = self.pool(name)
                    scorer = BlackBoxAttack(generated, k=spec.k, generated_cond=cond, source=name)
                    scores = run_attack(scorer, members, nonmembers, seed)
                    results[self._attack_key(spec.kind, name, results)] = scores

        for key, scores in results.items():
            atomic_write_json(self.path('attacks', f'{key}.json'), scores.model_dump(mode='json'))
        return results

    def evaluate(self) -> Dict[str, dict]:
        metrics = self.ensamble['metrics']
        split = self.dataset.split
        fpr_cap = self.config.metrics.fpr_cap

        for path in sorted(self.path('attacks').glob('*.json')):
            scores = AttackScores.model_validate_json(path.read_text())
            report = roc_report(scores, fpr_cap)
            write_roc_csv(report, self.path('roc', f'{path.stem}.csv'))
            metrics['attacks'][path.stem] = {
                **report.model_dump(mode='json'),
                'orientation': scores.orientation,
                'params': scores.params,
                'fpr_cap': fpr_cap,
                'roc_csv': f'roc/{path.stem}.csv',
            }

        train_points = np.unique(stack_x0(split.members), axis=0)
        test_points = stack_x0(split.test)
        eps = self.config.metrics.memorization_eps
        metrics['memorization']['eps_source'] = 'config' if eps else 'median_nn'
        if eps is None:
            eps = default_memorization_eps(train_points)
        metrics['memorization']['eps'] = eps
        for name in self.pool_names:
            generated, _ = self.pool(name)
            if self.config.metrics.quality:
                metrics['quality'][name] = {
                    'energy_distance': energy_distance(generated, test_points),
                    'n_generated': int(len(generated)),
                    'n_reference': int(len(test_points)),
                }
            metrics['memorization'].setdefault('fraction', {})[name] = memorization_fraction(
                generated, train_points, eps
            )

        duplicated = self.dataset.duplicated
        if duplicated and self.white_box_targets:
            t_sec = next(
                (a.t_sec for a in self.config.attacks if a.kind == 'secmi' and a.t_sec), None
            )
            for name in self.white_box_targets:
                report = memorization_detection(
                    self.model(name),
                    duplicated,
                    split.test,
                    self.sched,
                    t_sec,
                    seed=self.seed_for('detection'),
                )
                metrics['memorization'].setdefault('detection', {})[name] = {
                    'auc': report.auc,
                    'tpr_at_1pct_fpr': report.tpr_at_1pct_fpr,
                    'n_memorized': report.n_member,
                    'n_clean': report.n_nonmember,
                }

        if self.config.metrics.generalization:
            self._generalization(metrics['generalization'])
        return metrics

    # Run
    def run(self) -> RunManifest:
        """
        Execute every stage of the arm and write the manifest.

        On failure a manifest with status 'failed' is written before the
        exception propagates.
        """
        stages = [s for s in STAGES if s != 'distill' or self.defense == 'distillmd']
        logger.info(f'Running {self.config.name} seed {self.config.seed} arm {self.defense}')
        self.ensamble['status'] = 'in_progress'
        for stage in stages:
            start = time.perf_counter()
            try:
                getattr(self, stage)()
            except Exception as e:
                self.ensamble['status'] = 'failed'
                self.ensamble['status_reason'] = f'{stage}: {str(e)}'
                logger.exception(f'Stage {stage} failed')
                self.finalize('failed', self.ensamble['status_reason'])
                raise
            self.ensamble['timings'][stage] = time.perf_counter() - start
            logger.info(f'Stage {stage} done in {self.ensamble["timings"][stage]:.2f}s')
        self.ensamble['status'] = 'completed'
        return self.finalize('completed')

    def finalize(self, status: str, error: Optional[str] = None) -> RunManifest:
        manifest = new_manifest(
            self.config.model_dump(mode='json'),
            self.config.name,
            self.defense,
            self.config.seed,
        )
        artifacts = collect_artifacts(self.run_dir) if self.run_dir.exists() else {}
        manifest = manifest.model_copy(
            update={
                'status': status,
                'error': error,
                'artifacts': artifacts,
                'checkpoints': {
                    Path(rel).stem: digest
                    for rel, digest in artifacts.items()
                    if rel.startswith('checkpoints/')
                },
                'sampler': self.ensamble['sampler'],
                'metrics': self.ensamble['metrics'],
                'warnings': self.ensamble['warnings'],
                'skipped_attacks': self.ensamble['skipped_attacks'],
                'timings': self.ensamble['timings'],
            }
        )
        write_manifest(manifest, self.run_dir)
        return manifest

    # Internals
    def _save_model(self, name: str, model: Denoiser, trainer) -> None:
        save_checkpoint(model, self.path('checkpoints', f'{name}.ckpt'))
        trainer.write_loss_trace(self.path('traces', f'{name}.csv'))
        self._models[name] = model
        trace = trainer.ensamble['loss_trace']
        self.ensamble['metrics']['training'][name] = {
            'iterations': trainer.ensamble['stats']['iterations'],
            'epochs': trainer.ensamble['stats']['epochs'],
            'final_loss': trace[-1] if trace else None,
        }

    def _generation_tokens(self) -> Optional[np.ndarray]:
        spec = self.config.dataset
        if not spec.conditional:
            return None
        n_per = self.config.sampler.n_per_condition or math.ceil(
            self.config.sampler.n_samples / spec.n_classes
        )
        canonical = [class_tokens(c, spec.diversification_k)[0] for c in range(spec.n_classes)]
        return np.repeat(np.asarray(canonical, dtype=np.int64), n_per)

    def _white_box_scores(
        self, spec: AttackSpec, model: Denoiser, members, nonmembers, seed: int
    ) -> AttackScores:
        if spec.kind == 'loss':
            scorer = LossAttack(model, self.sched, spec.t_list, spec.n_mc)
            return run_attack(scorer, members, nonmembers, seed)
        if spec.t_sec_sweep:
            scores, _ = sweep_secmi(
                model, self.sched, members, nonmembers, spec.t_sec_sweep, spec.stride, seed
            )
            return scores
        scorer = SecMIAttack(model, self.sched, spec.t_sec, spec.stride)
        return run_attack(scorer, members, nonmembers, seed)

    def _attack_key(self, kind: str, source: Optional[str], taken: Dict[str, AttackScores]) -> str:
        key = kind if source is None or len(self.pool_names) == 1 else f'{kind}@{source}'
        suffix = 2
        base = key
        while key in taken:
            key = f'{base}-{suffix}'
            suffix += 1
        return key

    def _generalization(self, block: dict) -> None:
        split = self.dataset.split
        n_mc = self.config.metrics.gap_n_mc
        checks = [(name, split.members, name) for name in self.white_box_targets]
        if self.defense != 'none':
            # Each disjoint model should see the other half as non-member data.
            checks += [
                ('theta1', split.d1, 'theta1_own'),
                ('theta1', split.d2, 'theta1_other'),
                ('theta2', split.d2, 'theta2_own'),
                ('theta2', split.d1, 'theta2_other'),
            ]
        for index, (name, members, label) in enumerate(checks):
            rng = np.random.default_rng(self.seed_for('gap', index))
            gap, stderr = generalization_gap_estimate(
                self.model(name), members, split.test, self.sched, n_mc, rng
            )
            block[label] = {'gap': gap, 'stderr': stderr}


def run_experiment(
    config: ExperimentConfig, run_dir: Optional[Union[str, Path]] = None
) -> RunManifest:
    """Run every stage of the configured arm and return its manifest."""
    return ExperimentPipeline(config, run_dir).run()
