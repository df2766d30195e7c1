import io
import json
import tempfile
from pathlib import Path

import pandas as pd
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase

from corpus.datasets import IN_MATRIX, OUT_OF_MATRIX
from corpus.exceptions import MissingArtifactError
from corpus.synthetic import SyntheticSpec
from evaluation.models import MetricRecord
from hashindex.bench import BENCH_COLUMNS
from hashindex.exceptions import ResourceBudgetError
from neuhash.checkpoint import load_checkpoint
from training.exceptions import TrainingAborted

from .commands import EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC, exit_code_for
from .exceptions import ConfigError
from .models import PipelineRun
from .runconfig import SYNTHETIC_CONFIG, RunConfig

SYNTHETIC = 'users=60 items=40 vocab=50 topics=3 ratings_per_user=15 words_per_review=5'

SMALL_RUN = [
    '--synthetic', SYNTHETIC,
    '--min-user', '3', '--min-item', '3', '--vocab-size', '50',
    '--m', '16', '--hidden-sizes', '16', '--max-epochs', '2', '--batch-size', '100',
    '--learning-rate', '0.005', '--window', '10',
    '--users', '8', '--items', '16', '--repetitions', '1',
]


def run_quietly(name, *args):
    call_command(name, *args, stdout=io.StringIO())


class RunConfigTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def write_config(self, data):
        path = Path(self.tmp.name) / 'run.json'
        path.write_text(json.dumps(data), encoding='utf-8')
        return path

    def test_flags_override_file(self):
        path = self.write_config({'m': 16, 'seed': 4, 'train': {'batch_size': 10, 'alpha': 0.5}})
        config = RunConfig.from_sources(path, {'m': 24, 'seed': None, 'train': {'batch_size': 20}})
        self.assertEqual((config.m, config.seed), (24, 4))
        self.assertEqual(config.train['batch_size'], 20)
        self.assertEqual(config.train['alpha'], 0.5)
        self.assertEqual(config.train['max_epochs'], 30)

    def test_defaults(self):
        config = RunConfig.from_sources(None, {'output_dir': self.tmp.name})
        self.assertEqual(config.ks, [2, 6, 10])
        self.assertEqual(config.method, 'neuhash-cf')
        self.assertEqual(config.train_config().hidden_sizes, (1000, 1000))
        self.assertEqual(config.stage_dir('train'), Path(self.tmp.name) / 'model')

    def test_bundled_synthetic_config(self):
        config = RunConfig.from_sources(SYNTHETIC_CONFIG, {'output_dir': self.tmp.name, 'split_kind': OUT_OF_MATRIX})
        train_config = config.train_config()
        self.assertEqual(SyntheticSpec.parse(config.synthetic).users, 2000)
        self.assertEqual((config.m, config.vocab_size, config.split_kind), (32, 500, OUT_OF_MATRIX))
        self.assertEqual((train_config.learning_rate, train_config.noise_var_init), (0.005, 0.1))
        self.assertEqual((train_config.batch_size, train_config.hidden_sizes), (500, (200,)))
        self.assertEqual(train_config.noise_decay, 0.9999)

    def test_no_content_method_name(self):
        self.assertEqual(RunConfig.from_sources(None, {'variant': 'no_content'}).method, 'neuhash-cf-no-content')

    def test_rejected_values(self):
        cases = [
            {'synthetic': 'users=5', 'input': 'ratings.tsv'},
            {'variant': 'no_content', 'split_kind': OUT_OF_MATRIX},
            {'train_fraction': 1.0},
            {'m': 513},
            {'train': {'learning_rate': 0.0}},
            {'synthetic': 'colour=blue'},
        ]
        for overrides in cases:
            with self.subTest(overrides=overrides), self.assertRaises(ConfigError):
                RunConfig.from_sources(None, overrides)

    def test_cold_start_random_allows_no_content_out_of_matrix(self):
        config = RunConfig.from_sources(None, {'variant': 'no_content', 'split_kind': OUT_OF_MATRIX, 'cold_start_codes': 'random'})
        self.assertEqual(config.split_kind, OUT_OF_MATRIX)

    def test_unreadable_config_file(self):
        path = Path(self.tmp.name) / 'broken.json'
        path.write_text('{not json', encoding='utf-8')
        with self.assertRaises(ConfigError):
            RunConfig.from_sources(path)

    def test_exit_codes(self):
        self.assertEqual(exit_code_for(TrainingAborted("nan", history=None)), EXIT_NUMERIC)
        self.assertEqual(exit_code_for(ResourceBudgetError(10, 1)), EXIT_CONFIG)
        self.assertEqual(exit_code_for(MissingArtifactError('split/manifest.json')), EXIT_DATA)
        self.assertIsNone(exit_code_for(KeyError('x')))


class PipelineCommandTests(TestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.root = Path(self.tmp.name)

    def test_full_pipeline_writes_every_artifact(self):
        output = self.root / 'run'
        run_quietly('pipeline', *SMALL_RUN, '--output-dir', str(output))

        for relative in (
            'dataset/manifest.json', 'split/manifest.json',
            'model/checkpoint.bin', 'model/history.csv', 'model/manifest.json',
            'codes/codebook.bin', 'eval/metrics.csv', 'eval/series_num_items.csv',
            'eval/series_avg_item_popularity.csv', 'bench/bench.csv',
        ):
            self.assertTrue((output / relative).exists(), relative)

        metrics = pd.read_csv(output / 'eval' / 'metrics.csv')
        self.assertEqual(metrics['k'].astype(str).tolist(), ['2', '6', '10', 'mrr'])
        self.assertTrue(((metrics['value'] >= 0) & (metrics['value'] <= 1)).all())
        self.assertEqual(set(metrics['split']), {IN_MATRIX})
        self.assertEqual(list(pd.read_csv(output / 'bench' / 'bench.csv').columns), BENCH_COLUMNS)

        manifest = json.loads((output / 'model' / 'manifest.json').read_text())
        self.assertEqual(manifest['run_config']['m'], 16)
        checkpoint = load_checkpoint(output / 'model' / 'checkpoint.bin')
        self.assertEqual(checkpoint.params.m, 16)
        history = pd.read_csv(output / 'model' / 'history.csv')
        best_sigma2 = history.loc[history['epoch'] == manifest['best_epoch'], 'sigma2'].item()
        self.assertAlmostEqual(checkpoint.hyper.noise_var, best_sigma2, places=9)

        run = PipelineRun.objects.get(stage='pipeline')
        self.assertEqual((run.status, run.exit_code), ('succeeded', 0))
        self.assertEqual(MetricRecord.objects.filter(run=run).count(), 4)

    def test_same_seed_same_bytes(self):
        first, second = self.root / 'a', self.root / 'b'
        for output in (first, second):
            run_quietly('pipeline', *SMALL_RUN, '--seed', '7', '--output-dir', str(output))
        for relative in ('model/checkpoint.bin', 'codes/codebook.bin', 'eval/metrics.csv', 'split/test.bin'):
            self.assertEqual((first / relative).read_bytes(), (second / relative).read_bytes(), relative)

    def test_out_of_matrix_run(self):
        output = self.root / 'cold'
        run_quietly('pipeline', *SMALL_RUN, '--split-kind', OUT_OF_MATRIX, '--train-fraction', '0.5', '--output-dir', str(output))
        metrics = pd.read_csv(output / 'eval' / 'metrics.csv')
        self.assertEqual(set(metrics['split']), {f"{OUT_OF_MATRIX}_0.5"})

    def test_no_content_cold_start_with_random_codes(self):
        output = self.root / 'ablation'
        run_quietly(
            'pipeline', *SMALL_RUN, '--variant', 'no_content', '--split-kind', OUT_OF_MATRIX,
            '--cold-start-codes', 'random', '--output-dir', str(output),
        )
        metrics = pd.read_csv(output / 'eval' / 'metrics.csv')
        self.assertEqual(set(metrics['method']), {'neuhash-cf-no-content'})

    def test_stages_run_one_by_one(self):
        output = str(self.root / 'staged')
        run_quietly('preprocess', '--synthetic', SYNTHETIC, '--min-user', '3', '--min-item', '3', '--output-dir', output)
        run_quietly('split', '--output-dir', output)
        run_quietly('train', '--m', '8', '--hidden-sizes', '8', '--max-epochs', '1', '--batch-size', '200', '--output-dir', output)
        run_quietly('infer', '--output-dir', output)
        run_quietly('eval', '--ks', '10', '--output-dir', output)
        metrics = pd.read_csv(Path(output) / 'eval' / 'metrics.csv')
        self.assertEqual(metrics['k'].astype(str).tolist(), ['10', 'mrr'])
        self.assertEqual(
            list(PipelineRun.objects.order_by('pk').values_list('stage', flat=True)),
            ['preprocess', 'split', 'train', 'infer', 'eval'],
        )

    def test_train_without_split_is_a_data_error(self):
        with self.assertRaises(CommandError) as caught:
            run_quietly('train', '--output-dir', str(self.root / 'empty'))
        self.assertEqual(caught.exception.returncode, EXIT_DATA)
        run = PipelineRun.objects.get(stage='train')
        self.assertEqual((run.status, run.exit_code), ('failed', EXIT_DATA))

    def test_contradictory_config_is_a_config_error(self):
        with self.assertRaises(CommandError) as caught:
            run_quietly('split', '--variant', 'no_content', '--split-kind', OUT_OF_MATRIX, '--output-dir', str(self.root))
        self.assertEqual(caught.exception.returncode, EXIT_CONFIG)
        self.assertFalse(PipelineRun.objects.exists())

    def test_bench_over_budget_is_a_config_error(self):
        with self.settings(NEUHASH={**settings.NEUHASH, 'BENCH_MEMORY_BUDGET': 1024}):
            with self.assertRaises(CommandError) as caught:
                run_quietly('bench', '--users', '1000', '--items', '100000', '--output-dir', str(self.root))
        self.assertEqual(caught.exception.returncode, EXIT_CONFIG)
