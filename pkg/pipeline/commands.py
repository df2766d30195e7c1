"""
Shared base for the pipeline management commands.

Every command merges `--config` with its flags into a RunConfig, records a
PipelineRun, runs its stage and maps failures onto exit codes:
0 success, 1 usage/config, 2 data, 3 numeric.
"""
import logging

from django.core.management.base import BaseCommand, CommandError

from corpus.datasets import SPLIT_KINDS
from corpus.exceptions import CorpusError
from evaluation.exceptions import EvaluationError
from hashindex.exceptions import CodeBookFormatError, CodeLengthMismatch, MissingCodeError, ResourceBudgetError
from neuhash.exceptions import CheckpointFormatError, NumericError, ShapeError, UnknownItemError, UnknownUserError
from neuhash.params import VARIANTS
from training.exceptions import EmptyTrainingSetError

from .exceptions import ConfigError
from .models import PipelineRun
from .runconfig import COLD_START_ERROR, COLD_START_RANDOM, RunConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

# checked in order; NumericError first so TrainingAborted is numeric
EXIT_CODES = [
    (NumericError, EXIT_NUMERIC),
    ((ConfigError, ResourceBudgetError, CodeLengthMismatch), EXIT_CONFIG),
    ((
        CorpusError, EvaluationError, EmptyTrainingSetError, CheckpointFormatError, CodeBookFormatError,
        ShapeError, UnknownUserError, UnknownItemError, MissingCodeError, FileNotFoundError,
    ), EXIT_DATA),
]

TRAIN_KEYS = [
    'learning_rate', 'batch_size', 'max_epochs', 'alpha', 'noise_var_init', 'noise_decay',
    'adam_beta1', 'adam_beta2', 'adam_epsilon', 'eval_every', 'hidden_sizes', 'kl_weight',
]


def int_list(text):
    return [int(part) for part in text.replace(',', ' ').split()]


def exit_code_for(error):
    for classes, code in EXIT_CODES:
        if isinstance(error, classes):
            return code
    return None


def add_corpus_arguments(parser):
    parser.add_argument('--input', help="Raw ratings file (user, item, rating, timestamp, review)")
    parser.add_argument('--format', choices=['tsv', 'csv'])
    parser.add_argument('--synthetic', help="Generate a synthetic corpus, e.g. 'users=2000 items=1000'")
    parser.add_argument('--min-user', type=int, dest='min_user')
    parser.add_argument('--min-item', type=int, dest='min_item')
    parser.add_argument('--vocab-size', type=int, dest='vocab_size')
    parser.add_argument('--stopwords', help="Stopword list, one word per line")


def add_split_arguments(parser):
    parser.add_argument('--split-kind', choices=SPLIT_KINDS, dest='split_kind')
    parser.add_argument('--test-ratio', type=float, dest='test_ratio')
    parser.add_argument('--val-fraction', type=float, dest='val_fraction')
    parser.add_argument('--train-fraction', type=float, dest='train_fraction')
    parser.add_argument('--cold-start-codes', choices=[COLD_START_ERROR, COLD_START_RANDOM], dest='cold_start_codes')


def add_train_arguments(parser):
    parser.add_argument('--learning-rate', type=float, dest='learning_rate')
    parser.add_argument('--batch-size', type=int, dest='batch_size')
    parser.add_argument('--max-epochs', type=int, dest='max_epochs')
    parser.add_argument('--alpha', type=float)
    parser.add_argument('--noise-var-init', type=float, dest='noise_var_init')
    parser.add_argument('--noise-decay', type=float, dest='noise_decay')
    parser.add_argument('--eval-every', type=int, dest='eval_every')
    parser.add_argument('--hidden-sizes', type=int_list, dest='hidden_sizes', help="e.g. 1000,1000")
    parser.add_argument('--kl-weight', type=float, dest='kl_weight')


def add_eval_arguments(parser):
    parser.add_argument('--ks', type=int_list, help="NDCG cutoffs, e.g. 2,6,10")
    parser.add_argument('--window', type=int, dest='series_window', help="Smoothing window of the per-user series")
    parser.add_argument('--method', help="Method name written to metrics.csv")


def add_bench_arguments(parser):
    parser.add_argument('--users', type=int, dest='bench_users')
    parser.add_argument('--items', type=int_list, dest='bench_items', help="Item counts to sweep, e.g. 1000,10000")
    parser.add_argument('--repetitions', type=int, dest='bench_repetitions')


class StageCommand(BaseCommand):
    stage = None
    argument_groups = ()

    def add_arguments(self, parser):
        parser.add_argument('--config', help="JSON RunConfig; flags override its values")
        parser.add_argument('--output-dir', dest='output_dir')
        parser.add_argument('--seed', type=int)
        parser.add_argument('--threads', type=int, help="Worker cap; 1 gives bit-exact reruns")
        parser.add_argument('--m', type=int, help="Code length in bits")
        parser.add_argument('--variant', choices=VARIANTS)
        # the contradiction check needs these for every stage
        if add_split_arguments not in self.argument_groups:
            parser.add_argument('--split-kind', choices=SPLIT_KINDS, dest='split_kind')
            parser.add_argument('--cold-start-codes', choices=[COLD_START_ERROR, COLD_START_RANDOM], dest='cold_start_codes')
        for group in self.argument_groups:
            group(parser)

    def overrides(self, options):
        ignored = {'config', 'stdout', 'stderr', 'verbosity', 'settings', 'pythonpath', 'traceback', 'no_color', 'force_color', 'skip_checks'}
        values = {key: value for key, value in options.items() if key not in ignored and value is not None}
        values['train'] = {key: values.pop(key) for key in TRAIN_KEYS if key in values}
        return values

    def run_stage(self, config, run):
        raise NotImplementedError

    def handle(self, *args, **options):
        try:
            config = RunConfig.from_sources(options.get('config'), self.overrides(options))
        except ConfigError as error:
            raise CommandError(str(error), returncode=EXIT_CONFIG) from error

        run = PipelineRun.objects.create(stage=self.stage, config=config.to_dict(), output_dir=config.output_dir)
        try:
            result = self.run_stage(config, run)
        except Exception as error:
            code = exit_code_for(error)
            if code is None:
                run.finish(None, f"unexpected {type(error).__name__}: {error}")
                raise
            run.finish(code, str(error))
            logger.error("%s failed (exit %d): %s", self.stage, code, error)
            raise CommandError(str(error), returncode=code) from error

        run.finish(EXIT_OK)
        self.stdout.write(self.style.SUCCESS(f"{self.stage}: wrote {result}"))
