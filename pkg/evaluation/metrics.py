"""
Graded ranking metrics over one user's ranked test ratings.

NDCG@k uses gain 2^rating - 1 and discount log2(position + 1), normalised by
the DCG of the same ratings in descending order.
"""
import numpy as np


def gains(ratings):
    return np.power(2.0, np.asarray(ratings, dtype=np.float64)) - 1.0


def discounts(k):
    return 1.0 / np.log2(np.arange(2, k + 2, dtype=np.float64))


def dcg_at_k(ranked_ratings, k):
    top = gains(ranked_ratings)[:k]
    return float(np.sum(top * discounts(len(top))))


def ndcg_at_k(ranked_ratings, k, ideal=None):
    if k <= 0:
        raise ValueError(f"k must be >= 1, got {k}")
    if len(ranked_ratings) == 0:
        raise ValueError("ndcg_at_k needs a non-empty ranking")
    pool = ranked_ratings if ideal is None else ideal
    ideal_dcg = dcg_at_k(np.sort(np.asarray(pool, dtype=np.float64))[::-1], k)
    if ideal_dcg == 0:
        return 1.0
    return dcg_at_k(ranked_ratings, k) / ideal_dcg


def mrr(ranked_ratings):
    """Reciprocal rank of the first maximum rating."""
    ranked = np.asarray(ranked_ratings, dtype=np.float64)
    if len(ranked) == 0:
        raise ValueError("mrr needs a non-empty ranking")
    return 1.0 / (int(np.argmax(ranked)) + 1)


def random_ndcg_samples(ratings, k, draws, rng):
    """NDCG@k of `draws` uniformly random orderings of one user's ratings."""
    ratings = np.asarray(ratings, dtype=np.float64)
    orders = np.argsort(rng.random((draws, len(ratings))), axis=1)
    depth = min(k, len(ratings))
    ranked_gains = gains(ratings)[orders[:, :depth]]
    ideal = dcg_at_k(np.sort(ratings)[::-1], k)
    if ideal == 0:
        return np.ones(draws)
    return (ranked_gains @ discounts(depth)) / ideal
