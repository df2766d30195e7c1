"""
Per-user evaluation of a CodeBook against one part of a split, the random
ranking baseline, the popularity/activity series and their CSV files.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from hashindex.ranking import rank_items

from .exceptions import EmptyEvaluationError
from .metrics import mrr, ndcg_at_k, random_ndcg_samples

logger = logging.getLogger(__name__)

DEFAULT_KS = (2, 6, 10)
SERIES_KEYS = ('avg_item_popularity', 'num_items')
SERIES_METRIC_K = 10


@dataclass
class UserRecord:
    user: int
    ndcg: dict
    mrr: float
    avg_item_popularity: float
    num_items: int
    num_test: int


@dataclass
class MetricsReport:
    ks: tuple
    part: str
    ndcg_at: dict = field(default_factory=dict)
    mrr: float = 0.0
    per_user: list = field(default_factory=list)
    skipped_users: int = 0

    @property
    def evaluated_users(self):
        return len(self.per_user)

    def rows(self, method, split_name, m):
        """metrics.csv rows; the MRR row carries 'mrr' in the k column."""
        rows = [[method, split_name, m, k, self.ndcg_at[k]] for k in self.ks]
        rows.append([method, split_name, m, 'mrr', self.mrr])
        return rows


@dataclass
class RandomBaseline:
    mean: float
    stderr: float
    draws_per_user: int


def _user_groups(triples):
    """(user, items, ratings) per user, users ascending."""
    order = np.lexsort((triples['item'], triples['user']))
    triples = triples[order]
    users, starts = np.unique(triples['user'], return_index=True)
    ends = np.append(starts[1:], len(triples))
    for user, start, end in zip(users, starts, ends):
        yield int(user), triples['item'][start:end].astype(np.int64), triples['rating'][start:end]


def user_popularity(split, dataset):
    """Mean training count of each user's training items (0 without training items)."""
    item_counts = np.bincount(split.train['item'], minlength=dataset.num_items).astype(np.float64)
    totals = np.bincount(split.train['user'], weights=item_counts[split.train['item']], minlength=dataset.num_users)
    sizes = np.bincount(split.train['user'], minlength=dataset.num_users)
    return np.divide(totals, sizes, out=np.zeros(dataset.num_users), where=sizes > 0)


def evaluate(codebook, split, dataset, ks=DEFAULT_KS, part='test'):
    ks = tuple(sorted(set(int(k) for k in ks)))
    if not ks or ks[0] <= 0:
        raise ValueError(f"ks must be positive cutoffs, got {ks}")

    popularity = user_popularity(split, dataset)
    activity = dataset.user_counts()
    report = MetricsReport(ks=ks, part=part)

    for user, items, ratings in _user_groups(split.part(part)):
        by_item = dict(zip(items.tolist(), ratings.tolist()))
        ranked = [by_item[item] for item in rank_items(codebook.user_code(user), codebook, items)]
        report.per_user.append(UserRecord(
            user=user,
            ndcg={k: ndcg_at_k(ranked, k) for k in ks},
            mrr=mrr(ranked),
            avg_item_popularity=float(popularity[user]),
            num_items=int(activity[user]),
            num_test=len(items),
        ))

    report.skipped_users = dataset.num_users - report.evaluated_users
    if report.skipped_users:
        logger.warning("%d users have no %s ratings and were skipped", report.skipped_users, part)
    if not report.per_user:
        raise EmptyEvaluationError(f"no user has {part} ratings")

    report.ndcg_at = {k: float(np.mean([record.ndcg[k] for record in report.per_user])) for k in ks}
    report.mrr = float(np.mean([record.mrr for record in report.per_user]))
    logger.info(
        "%s: %d users, %s, MRR %.4f", part, report.evaluated_users,
        ', '.join(f"NDCG@{k} {value:.4f}" for k, value in report.ndcg_at.items()), report.mrr,
    )
    return report


def random_baseline(split, k=SERIES_METRIC_K, draws=100_000, seed=0, part='test'):
    """
    Monte-Carlo expectation of mean NDCG@k when every user's list is ordered
    uniformly at random. `draws` is spread evenly over the users; `stderr`
    is the standard error of a single random ranking's mean over users.
    """
    groups = [ratings for _, _, ratings in _user_groups(split.part(part))]
    if not groups:
        raise EmptyEvaluationError(f"no user has {part} ratings")
    per_user = max(1, -(-draws // len(groups)))
    rng = np.random.default_rng(seed)
    means, variances = [], []
    for ratings in groups:
        samples = random_ndcg_samples(ratings, k, per_user, rng)
        means.append(samples.mean())
        variances.append(samples.var())
    mean = float(np.mean(means))
    stderr = float(np.sqrt(np.sum(variances)) / len(groups))
    return RandomBaseline(mean=mean, stderr=stderr, draws_per_user=per_user)


def user_series(report, key, window=1000):
    """
    Users sorted ascending by `key` (ties by user id); each position holds
    the mean NDCG@10 of the users in a window centred on it, truncated at the
    ends. A window covering every user yields the global mean throughout.
    """
    if key not in SERIES_KEYS:
        raise ValueError(f"unknown series key: {key}")
    if window < 1:
        raise ValueError("window must be >= 1")
    if SERIES_METRIC_K not in report.ks:
        raise ValueError(f"series need NDCG@{SERIES_METRIC_K} in the report")

    records = sorted(report.per_user, key=lambda record: (getattr(record, key), record.user))
    values = np.array([record.ndcg[SERIES_METRIC_K] for record in records], dtype=np.float64)
    keys = np.array([getattr(record, key) for record in records], dtype=np.float64)
    count = len(values)

    if window >= count:
        smoothed = np.full(count, values.mean() if count else 0.0)
    else:
        totals = np.concatenate([[0.0], np.cumsum(values)])
        positions = np.arange(count)
        low = np.maximum(0, positions - (window - 1) // 2)
        high = np.minimum(count, positions + window // 2 + 1)
        smoothed = (totals[high] - totals[low]) / (high - low)

    return pd.DataFrame({'position': np.arange(count), key: keys, 'ndcg10': smoothed})


def write_metrics_csv(rows, path):
    frame = pd.DataFrame(rows, columns=['method', 'split', 'm', 'k', 'value'])
    frame.to_csv(path, index=False, float_format='%.10g')
    return path


def write_series_csv(series, path):
    series.to_csv(path, index=False, float_format='%.10g')
    return path
