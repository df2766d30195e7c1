"""
Pipeline stages. Each reads the artifacts of the stage before it from the
run's output directory, writes its own artifact directory with a manifest
echoing the RunConfig, and returns that directory.
"""
import logging
from pathlib import Path

from corpus.content import build_content, load_stopwords, stopwords_digest
from corpus.datasets import IN_MATRIX
from corpus.exceptions import MissingArtifactError
from corpus.filtering import core_filter
from corpus.ingest import deduplicate_events, load_ratings
from corpus.splits import split_in_matrix, split_out_of_matrix
from corpus.storage import load_dataset, load_split, save_dataset, save_split, write_manifest
from corpus.synthetic import SyntheticSpec, generate_events, write_events
from evaluation.models import MetricRecord
from evaluation.report import SERIES_KEYS, SERIES_METRIC_K, evaluate, random_baseline, user_series, write_metrics_csv, write_series_csv
from hashindex.bench import bench_sweep, write_bench_csv
from hashindex.codebook import load_codebook, save_codebook
from neuhash.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from training.trainer import infer_codes, train, write_history_csv

from .exceptions import ConfigError

logger = logging.getLogger(__name__)

CHECKPOINT_FILE = 'checkpoint.bin'
HISTORY_FILE = 'history.csv'
CODEBOOK_FILE = 'codebook.bin'
METRICS_FILE = 'metrics.csv'
BENCH_FILE = 'bench.csv'


def _require(path):
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(path)
    return path


def _stage_manifest(config, **extra):
    return {'run_config': config.to_dict(), 'seed': config.seed, **extra}


def split_name(config):
    if config.split_kind == IN_MATRIX:
        return IN_MATRIX
    return f"{config.split_kind}_{config.train_fraction:g}"


def run_preprocess(config, run=None):
    directory = config.stage_dir('preprocess')
    directory.mkdir(parents=True, exist_ok=True)

    if config.synthetic:
        spec = SyntheticSpec.parse(config.synthetic, seed=config.seed)
        events = generate_events(spec)
        source = write_events(events, directory / 'synthetic.tsv', format='tsv')
    elif config.input:
        source = _require(config.input)
        events = load_ratings(source, format=config.format)
    else:
        raise ConfigError({'input': ['preprocess needs --input or --synthetic']})

    stopwords = load_stopwords(config.stopwords)
    events = deduplicate_events(events)
    dataset = core_filter(events, min_user=config.min_user, min_item=config.min_item)
    dataset = build_content(dataset, events, vocab_size=config.vocab_size, stopwords=stopwords)
    save_dataset(dataset, directory, manifest=_stage_manifest(
        config,
        source=str(source),
        stopwords_sha256=stopwords_digest(stopwords),
    ))
    return directory


def run_split(config, run=None):
    dataset = load_dataset(config.stage_dir('preprocess'))
    if config.split_kind == IN_MATRIX:
        split = split_in_matrix(dataset, test_ratio=config.test_ratio, val_fraction=config.val_fraction, seed=config.seed)
    else:
        split = split_out_of_matrix(
            dataset,
            train_fraction=config.train_fraction,
            val_fraction=config.val_fraction,
            seed=config.seed,
            test_ratio=config.test_ratio,
        )
    return save_split(split, config.stage_dir('split'), manifest=_stage_manifest(config))


def run_train(config, run=None):
    dataset = load_dataset(config.stage_dir('preprocess'))
    split = load_split(config.stage_dir('split'))
    train_config = config.train_config()

    params, history = train(split, dataset, train_config)

    directory = config.stage_dir('train')
    directory.mkdir(parents=True, exist_ok=True)
    save_checkpoint(directory / CHECKPOINT_FILE, Checkpoint(
        params=params,
        hyper=train_config.hyper(history.best_sigma2()),
        seeds={'seed': config.seed},
        extra={
            'best_epoch': history.best_epoch,
            'split_kind': split.kind,
            'train_config': train_config.to_dict(),
        },
    ))
    write_history_csv(history, directory / HISTORY_FILE)
    write_manifest(directory, _stage_manifest(
        config,
        best_epoch=history.best_epoch,
        best_val_ndcg10=history.best_val_ndcg10 if history.records else None,
        epochs=len(history.records),
    ))
    return directory


def run_infer(config, run=None):
    dataset = load_dataset(config.stage_dir('preprocess'))
    checkpoint = load_checkpoint(_require(config.stage_dir('train') / CHECKPOINT_FILE))
    codebook = infer_codes(checkpoint.params, dataset)

    directory = config.stage_dir('infer')
    directory.mkdir(parents=True, exist_ok=True)
    save_codebook(codebook, directory / CODEBOOK_FILE)
    write_manifest(directory, _stage_manifest(
        config,
        m=codebook.m,
        num_users=codebook.num_users,
        num_items=codebook.num_items,
        variant=checkpoint.params.variant,
    ))
    return directory


def run_eval(config, run=None):
    dataset = load_dataset(config.stage_dir('preprocess'))
    split = load_split(config.stage_dir('split'))
    codebook = load_codebook(_require(config.stage_dir('infer') / CODEBOOK_FILE))

    report = evaluate(codebook, split, dataset, ks=config.ks, part='test')
    name = split_name(config)

    directory = config.stage_dir('eval')
    directory.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(report.rows(config.method, name, codebook.m), directory / METRICS_FILE)

    if SERIES_METRIC_K in report.ks:
        for key in SERIES_KEYS:
            write_series_csv(user_series(report, key, config.series_window), directory / f"series_{key}.csv")
    else:
        logger.warning("NDCG@%d not requested; per-user series are not written", SERIES_METRIC_K)

    baseline = random_baseline(split, k=SERIES_METRIC_K, seed=config.seed)
    MetricRecord.record_report(report, config.method, name, codebook.m, run=run)
    write_manifest(directory, _stage_manifest(
        config,
        evaluated_users=report.evaluated_users,
        skipped_users=report.skipped_users,
        random_ndcg10={'mean': baseline.mean, 'stderr': baseline.stderr, 'draws_per_user': baseline.draws_per_user},
    ))
    return directory


def run_bench(config, run=None):
    report = bench_sweep(
        config.bench_users,
        config.bench_items,
        config.m,
        repetitions=config.bench_repetitions,
        threads=config.threads,
        seed=config.seed,
    )
    directory = config.stage_dir('bench')
    directory.mkdir(parents=True, exist_ok=True)
    write_bench_csv(report, directory / BENCH_FILE, threads=1)
    threads = max(row.threads for row in report.rows)
    if threads > 1:
        write_bench_csv(report, directory / f"bench_threads{threads}.csv", threads=threads)
    write_manifest(directory, _stage_manifest(config, **report.manifest()))
    return directory


STAGES = {
    'preprocess': run_preprocess,
    'split': run_split,
    'train': run_train,
    'infer': run_infer,
    'eval': run_eval,
    'bench': run_bench,
}


def run_pipeline(config, run=None):
    for name, stage in STAGES.items():
        logger.info("Stage %s", name)
        stage(config, run=run)
    return Path(config.output_dir)