"""
Mini-batch training with Adam, per-batch noise annealing and best-checkpoint
selection on validation NDCG@10, plus deterministic code inference.
"""
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd
import scipy.sparse as sp
from django.conf import settings

from evaluation.report import evaluate
from hashindex.codebook import CodeBook
from neuhash.exceptions import NumericError, ShapeError, UnknownItemError
from neuhash.network import INFER, Hyper, RatingBatch, encode_items, encode_item_id, encode_user, forward_backward, sample_mu
from neuhash.params import CONTENT_AWARE, VARIANTS, init_params

from .exceptions import EmptyTrainingSetError, TrainingAborted
from .optim import AdamState, adam_step

logger = logging.getLogger(__name__)

VALIDATION_K = 10
HISTORY_COLUMNS = [
    'epoch', 'loss_total', 'loss_rating', 'loss_kl_user', 'loss_kl_item',
    'loss_content', 'sigma2', 'val_ndcg10', 'seconds',
]


@dataclass
class TrainConfig:
    learning_rate: float = 0.0005
    batch_size: int = 2000
    max_epochs: int = 30
    alpha: float = 0.001
    noise_var_init: float = 1.0
    noise_decay: float = 0.9999
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0
    eval_every: int = 1
    m: int = 32
    hidden_sizes: tuple = (1000, 1000)
    variant: str = CONTENT_AWARE
    kl_weight: float = 1.0

    def __post_init__(self):
        self.hidden_sizes = tuple(int(size) for size in self.hidden_sizes)
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0 < self.noise_decay <= 1:
            raise ValueError("noise_decay must be in (0, 1]")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be >= 0")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant: {self.variant}")

    def hyper(self, noise_var=None):
        return Hyper(
            alpha=self.alpha,
            noise_var=self.noise_var_init if noise_var is None else noise_var,
            anneal_factor=self.noise_decay,
            kl_weight=self.kl_weight,
        )

    def to_dict(self):
        values = asdict(self)
        values['hidden_sizes'] = list(self.hidden_sizes)
        return values


@dataclass
class EpochRecord:
    epoch: int
    loss_total: float
    loss_rating: float
    loss_kl_user: float
    loss_kl_item: float
    loss_content: float
    sigma2: float
    batches: int
    val_ndcg10: float = math.nan
    seconds: float = 0.0


@dataclass
class TrainHistory:
    noise_var_init: float
    noise_decay: float
    records: list = field(default_factory=list)
    best_epoch: int = 0
    best_val_ndcg10: float = math.nan

    def expected_sigma2(self, batches):
        return self.noise_var_init * self.noise_decay ** batches

    def best_sigma2(self):
        """sigma^2 at the end of the epoch whose params were kept."""
        if not self.records:
            return self.noise_var_init
        for record in self.records:
            if record.epoch == self.best_epoch:
                return record.sigma2
        return self.records[-1].sigma2

    def frame(self):
        return pd.DataFrame([[getattr(record, column) for column in HISTORY_COLUMNS] for record in self.records], columns=HISTORY_COLUMNS)


@dataclass
class TrainSeeds:
    init: np.random.Generator
    shuffle: np.random.Generator
    sample: np.random.Generator

    @classmethod
    def from_seed(cls, seed):
        init, shuffle, sample = np.random.SeedSequence(seed).spawn(3)
        return cls(np.random.default_rng(init), np.random.default_rng(shuffle), np.random.default_rng(sample))


def initial_params(dataset, config, rng):
    return init_params(
        rng,
        config.variant,
        config.m,
        num_users=dataset.num_users,
        vocab_size=dataset.vocab_size,
        num_items=dataset.num_items,
        hidden_sizes=config.hidden_sizes,
    )


def train(split, dataset, config):
    """
    Returns (params, history). params are those of the epoch with the best
    validation NDCG@10 (strictly better wins, so the earliest best is kept);
    without any validation pass they are the final params.
    """
    if len(split.train) == 0:
        raise EmptyTrainingSetError("the training set has no ratings")
    if config.variant == CONTENT_AWARE and not dataset.has_content:
        raise ShapeError("the content-aware variant needs a dataset with content")
    if config.variant == CONTENT_AWARE and dataset.vocab_size == 0:
        raise ShapeError("the content-aware variant needs a non-empty vocabulary")

    seeds = TrainSeeds.from_seed(config.seed)
    params = initial_params(dataset, config, seeds.init)
    history = TrainHistory(config.noise_var_init, config.noise_decay)
    if config.max_epochs == 0:
        return params, history

    state = AdamState.for_params(params)
    betas = (config.adam_beta1, config.adam_beta2)
    content = dataset.content if config.variant == CONTENT_AWARE else None
    train_triples = split.train
    has_validation = len(split.validation) > 0
    if not has_validation:
        logger.warning("Empty validation set; the final epoch's params are returned")

    sigma2 = config.noise_var_init
    batches = 0
    best = None
    logger.info(
        "Training %s m=%d on %d ratings, batch %d, %d epochs",
        config.variant, config.m, len(train_triples), config.batch_size, config.max_epochs,
    )

    for epoch in range(1, config.max_epochs + 1):
        started = time.perf_counter()
        order = seeds.shuffle.permutation(len(train_triples))
        sums = {'total': 0.0, 'rating': 0.0, 'kl_user': 0.0, 'kl_item': 0.0, 'content': 0.0}

        for start in range(0, len(order), config.batch_size):
            batch = RatingBatch.from_triples(train_triples[order[start:start + config.batch_size]], dataset.max_rating, index=batches)
            try:
                result = forward_backward(batch, params, config.hyper(sigma2), rng=seeds.sample, content=content)
            except NumericError as error:
                raise TrainingAborted(f"epoch {epoch}: {error}", history, batch_index=batches) from error
            adam_step(params, result.grads, state, config.learning_rate, betas, config.adam_epsilon)

            sums['total'] += result.loss * len(batch)
            for name, value in result.parts.items():
                sums[name] += value * len(batch)
            sigma2 *= config.noise_decay
            batches += 1

        count = len(order)
        record = EpochRecord(
            epoch=epoch,
            loss_total=sums['total'] / count,
            loss_rating=sums['rating'] / count,
            loss_kl_user=sums['kl_user'] / count,
            loss_kl_item=sums['kl_item'] / count,
            loss_content=sums['content'] / count,
            sigma2=sigma2,
            batches=batches,
        )

        if has_validation and epoch % config.eval_every == 0:
            codebook = infer_codes(params, dataset, users=split.users_of('validation'), items=split.items_of('validation'))
            record.val_ndcg10 = evaluate(codebook, split, dataset, ks=(VALIDATION_K,), part='validation').ndcg_at[VALIDATION_K]
            if best is None or record.val_ndcg10 > history.best_val_ndcg10:
                best = params.copy()
                history.best_epoch = epoch
                history.best_val_ndcg10 = record.val_ndcg10

        record.seconds = time.perf_counter() - started
        history.records.append(record)
        logger.info(
            "epoch %d: loss %.4f (rating %.4f, content %.4f) sigma2 %.6f val NDCG@10 %.4f",
            epoch, record.loss_total, record.loss_rating, record.loss_content, sigma2, record.val_ndcg10,
        )

    if best is None:
        return params, history
    logger.info("Best validation NDCG@10 %.4f at epoch %d", history.best_val_ndcg10, history.best_epoch)
    return best, history


def _chunks(ids, size):
    for start in range(0, len(ids), size):
        yield ids[start:start + size]


def infer_codes(params, dataset, users=None, items=None, extra_content=None):
    """
    Deterministic codes (mu = 0.5) for the requested dense user and item ids
    (default: all). Content-aware item codes are computed from content rows;
    `extra_content` appends rows for items outside the dataset, which take
    ids |I|, |I|+1, ...
    """
    chunk = settings.NEUHASH['INFER_CHUNK']
    mu = sample_mu(params.m, INFER)
    users = np.arange(params.num_users) if users is None else np.asarray(users, dtype=np.int64)

    if params.is_content_aware:
        content = dataset.content
        if extra_content is not None:
            content = sp.vstack([content, sp.csr_matrix(extra_content)]).tocsr()
        default_items = content.shape[0]
    else:
        if extra_content is not None:
            raise ShapeError("the no-content variant cannot encode items from content")
        default_items = params.num_items
    items = np.arange(default_items) if items is None else np.asarray(items, dtype=np.int64)

    user_z = np.empty((len(users), params.m))
    for position, ids in zip(range(0, len(users), chunk), _chunks(users, chunk)):
        user_z[position:position + len(ids)] = encode_user(ids, params, mu).z

    item_z = np.empty((len(items), params.m))
    for position, ids in zip(range(0, len(items), chunk), _chunks(items, chunk)):
        if params.is_content_aware:
            bad = (ids < 0) | (ids >= content.shape[0])
            if np.any(bad):
                raise UnknownItemError(f"unknown item index {int(ids[bad][0])}: no content row")
            item_z[position:position + len(ids)] = encode_items(params, content[ids], mu).z
        else:
            item_z[position:position + len(ids)] = encode_item_id(ids, params, mu).z

    return CodeBook.from_signs(users, user_z, items, item_z)


def write_history_csv(history, path):
    history.frame().to_csv(path, index=False, float_format='%.10g')
    return path
