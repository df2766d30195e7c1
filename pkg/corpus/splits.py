"""
In-matrix and out-of-matrix train/validation/test splits.

In-matrix: every user's ratings are shuffled and cut test/train, then part of
the training side moves to validation.

Out-of-matrix: items are sorted by rating count and striped so both sides get
items with similar counts. The test and validation items depend only on the
seed, so the fractional cold-start variants (10%..50% training items) share
them and their training item sets are nested.
"""
import logging

import numpy as np

from .datasets import IN_MATRIX, OUT_OF_MATRIX, Split
from .exceptions import SplitArgumentError

logger = logging.getLogger(__name__)

# items per stratum when taking nested training subsets
TRAIN_STRATUM = 10


def _round_half_up(value):
    return int(np.floor(value + 0.5))


def _check_ratio(name, value, allow_zero=False):
    low_ok = value >= 0 if allow_zero else value > 0
    if not (low_ok and value < 1):
        raise SplitArgumentError(f"{name} must be in {'[0' if allow_zero else '(0'}, 1), got {value}")


def split_in_matrix(dataset, test_ratio=0.5, val_fraction=0.15, seed=0):
    _check_ratio('test_ratio', test_ratio)
    _check_ratio('val_fraction', val_fraction, allow_zero=True)

    rng = np.random.default_rng(seed)
    ratings = dataset.ratings
    # ratings are sorted by user, so each user is one contiguous run
    starts = np.searchsorted(ratings['user'], np.arange(dataset.num_users))
    ends = np.append(starts[1:], len(ratings))

    parts = {'train': [], 'validation': [], 'test': []}
    for start, end in zip(starts, ends):
        rows = np.arange(start, end)
        if len(rows) == 0:
            continue
        rows = rng.permutation(rows)
        n_test = min(_round_half_up(len(rows) * test_ratio), len(rows) - 1)
        test, train = rows[:n_test], rows[n_test:]
        n_val = min(int(np.floor(len(train) * val_fraction)), len(train) - 1)
        parts['test'].append(test)
        parts['validation'].append(train[:n_val])
        parts['train'].append(train[n_val:])

    def gather(name):
        rows = np.sort(np.concatenate(parts[name])) if parts[name] else np.zeros(0, dtype=np.int64)
        return ratings[rows]

    split = Split(
        kind=IN_MATRIX,
        train=gather('train'),
        validation=gather('validation'),
        test=gather('test'),
        seed=seed,
        parameters={'test_ratio': test_ratio, 'val_fraction': val_fraction},
    )
    _log_split(split)
    return split


def items_by_popularity(dataset):
    """Item ids sorted by descending rating count, ascending id on ties."""
    counts = dataset.item_counts()
    return np.lexsort((np.arange(dataset.num_items), -counts))


def stripe(ordered, share, rng):
    """
    Deal `ordered` (most popular first) into (taken, rest) so that `taken` gets
    round(share * t) of the first t items at every stratum boundary. A stratum is
    the smallest block holding one item of the rarer side; the pick inside a
    stratum is random.
    """
    ordered = np.asarray(ordered)
    if len(ordered) == 0 or share <= 0:
        return ordered[:0], ordered
    stratum = max(2, _round_half_up(1.0 / min(share, 1.0 - share)))
    taken, rest = [], []
    for start in range(0, len(ordered), stratum):
        block = ordered[start:start + stratum]
        quota = _round_half_up(share * (start + len(block))) - _round_half_up(share * start)
        block = rng.permutation(block)
        taken.append(block[:quota])
        rest.append(block[quota:])
    return np.concatenate(taken), np.concatenate(rest)


def nested_subset(ordered, share, keys):
    """
    Take round(share * |stratum|) items with the smallest `keys` from each block
    of TRAIN_STRATUM consecutive items. For fixed keys, a larger share always
    selects a superset.
    """
    ordered = np.asarray(ordered)
    chosen = []
    for start in range(0, len(ordered), TRAIN_STRATUM):
        block = ordered[start:start + TRAIN_STRATUM]
        quota = _round_half_up(share * len(block))
        chosen.append(block[np.argsort(keys[start:start + TRAIN_STRATUM], kind='stable')[:quota]])
    return np.concatenate(chosen) if chosen else ordered[:0]


def split_out_of_matrix(dataset, train_fraction=0.5, val_fraction=0.15, seed=0, test_ratio=0.5):
    if not 0 < train_fraction < 1:
        raise SplitArgumentError(f"train_fraction must be in (0, 1), got {train_fraction}")
    _check_ratio('val_fraction', val_fraction, allow_zero=True)
    _check_ratio('test_ratio', test_ratio)

    # f > 1 - test_ratio leaves no room for the shared test side
    test_share = min(test_ratio, 1.0 - train_fraction)
    rng = np.random.default_rng(seed)

    ordered = items_by_popularity(dataset)
    test_items, pool = stripe(ordered, test_share, rng)
    pool = _keep_order(ordered, pool)
    validation_items, candidates = stripe(pool, val_fraction, rng)
    candidates = _keep_order(ordered, candidates)

    keys = rng.random(len(candidates))
    share = min(1.0, train_fraction / (1.0 - test_share))
    train_items = nested_subset(candidates, share, keys)

    split = Split(
        kind=OUT_OF_MATRIX,
        train=_ratings_of(dataset, train_items),
        validation=_ratings_of(dataset, validation_items),
        test=_ratings_of(dataset, test_items),
        seed=seed,
        train_fraction=train_fraction,
        parameters={
            'train_fraction': train_fraction,
            'val_fraction': val_fraction,
            'test_ratio': test_ratio,
        },
    )
    assert not np.isin(split.test['item'], split.train['item']).any(), "test item leaked into training"
    _log_split(split)
    return split


def _keep_order(ordered, subset):
    """`subset` re-sorted into the popularity order of `ordered`."""
    rank = np.empty(len(ordered), dtype=np.int64)
    rank[ordered] = np.arange(len(ordered))
    return subset[np.argsort(rank[subset], kind='stable')]


def _ratings_of(dataset, items):
    mask = np.isin(dataset.ratings['item'], items)
    return dataset.ratings[mask]


def _log_split(split):
    logger.info(
        "%s split: %d train / %d validation / %d test ratings (%d / %d / %d items)",
        split.kind,
        len(split.train), len(split.validation), len(split.test),
        len(split.items_of('train')), len(split.items_of('validation')), len(split.items_of('test')),
    )

