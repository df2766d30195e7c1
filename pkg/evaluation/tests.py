import itertools
import math
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
from django.test import SimpleTestCase, TestCase

from corpus.datasets import IN_MATRIX, Dataset, Split, empty_triples, make_triples
from hashindex.codebook import CodeBook
from hashindex.exceptions import MissingCodeError

from .metrics import mrr, ndcg_at_k
from .models import MetricRecord
from .report import MetricsReport, UserRecord, evaluate, random_baseline, user_series, write_metrics_csv


def brute_dcg(ratings, k):
    return sum((2 ** r - 1) / math.log2(position + 2) for position, r in enumerate(ratings[:k]))


def brute_mrr(ranking):
    best = max(ranking)
    return next(1.0 / (position + 1) for position, r in enumerate(ranking) if r == best)


def toy_setup(num_users, num_items, test_pairs, train_pairs=(), m=16, seed=0):
    """Dataset/Split over dense ids plus a random CodeBook for every user and item."""
    rng = np.random.default_rng(seed)

    def triples(pairs):
        if not pairs:
            return empty_triples()
        users, items, ratings = zip(*pairs)
        return make_triples(users, items, ratings)

    train, test = triples(list(train_pairs)), triples(list(test_pairs))
    all_ratings = np.concatenate([train, test])
    dataset = Dataset(
        user_index=[f"u{u}" for u in range(num_users)],
        item_index=[f"i{i}" for i in range(num_items)],
        ratings=all_ratings[np.lexsort((all_ratings['item'], all_ratings['user']))],
        max_rating=5.0,
    )
    split = Split(kind=IN_MATRIX, train=train, validation=empty_triples(), test=test, seed=0)
    signs = lambda rows: np.where(rng.random((rows, m)) < 0.5, -1.0, 1.0)
    codebook = CodeBook.from_signs(np.arange(num_users), signs(num_users), np.arange(num_items), signs(num_items))
    return dataset, split, codebook


class NDCGTests(SimpleTestCase):

    def test_ideal_order(self):
        self.assertEqual(ndcg_at_k([5, 4, 3, 1], 3), 1.0)

    def test_single_item(self):
        self.assertEqual(ndcg_at_k([2], 10), 1.0)

    def test_two_items_reversed(self):
        expected = (7 + 31 / math.log2(3)) / (31 + 7 / math.log2(3))
        self.assertAlmostEqual(ndcg_at_k([3, 5], 2), expected, places=12)
        self.assertAlmostEqual(ndcg_at_k([3, 5], 2), 0.7499, places=4)

    def test_k_must_be_positive(self):
        with self.assertRaises(ValueError):
            ndcg_at_k([1, 2], 0)

    def test_permutation_oracle(self):
        rng = np.random.default_rng(0)
        for length in range(1, 7):
            for _ in range(4):
                ratings = rng.integers(1, 6, length).tolist()
                orders = set(itertools.permutations(ratings))
                for k in (1, 2, 6, 10):
                    ideal = max(brute_dcg(list(order), k) for order in orders)
                    for ranking in orders:
                        self.assertAlmostEqual(ndcg_at_k(list(ranking), k), brute_dcg(list(ranking), k) / ideal, delta=1e-12)
                for ranking in orders:
                    self.assertAlmostEqual(mrr(list(ranking)), brute_mrr(ranking), delta=1e-12)

    def test_promoting_higher_rating_never_hurts(self):
        ranking = [1, 3, 2, 5, 4]
        for position in range(len(ranking) - 1):
            if ranking[position] < ranking[position + 1]:
                swapped = list(ranking)
                swapped[position], swapped[position + 1] = swapped[position + 1], swapped[position]
                self.assertGreaterEqual(ndcg_at_k(swapped, 3), ndcg_at_k(ranking, 3))


class MRRTests(SimpleTestCase):

    def test_first(self):
        self.assertEqual(mrr([5, 1, 2]), 1.0)

    def test_third(self):
        self.assertAlmostEqual(mrr([1, 2, 5, 5]), 1 / 3)

    def test_all_equal(self):
        self.assertEqual(mrr([3, 3, 3]), 1.0)


class EvaluateTests(SimpleTestCase):

    def test_user_code_equal_to_top_item_gives_mrr_one(self):
        rng = np.random.default_rng(1)
        pairs = []
        for user in range(4):
            items = rng.choice(8, size=3, replace=False)
            pairs += [(user, int(item), float(rating)) for item, rating in zip(items, (2.0, 5.0, 3.0))]
        dataset, split, codebook = toy_setup(4, 8, pairs)
        for user in range(4):
            top = next(item for u, item, r in pairs if u == user and r == 5.0)
            codebook.user_codes[user] = codebook.item_codes[top]
        self.assertEqual(len(np.unique(codebook.item_codes, axis=0)), 8)

        report = evaluate(codebook, split, dataset)
        self.assertEqual(report.mrr, 1.0)
        self.assertEqual(report.evaluated_users, 4)

    def test_single_item_users(self):
        dataset, split, codebook = toy_setup(3, 3, [(0, 0, 4.0), (1, 1, 2.0), (2, 2, 5.0)])
        report = evaluate(codebook, split, dataset, ks={1})
        self.assertEqual(report.ndcg_at, {1: 1.0})
        self.assertEqual(report.mrr, 1.0)

    def test_users_without_test_ratings_are_skipped(self):
        dataset, split, codebook = toy_setup(3, 3, [(0, 0, 4.0), (0, 1, 2.0)], train_pairs=[(1, 0, 3.0), (2, 1, 3.0)])
        with self.assertLogs('evaluation.report', level='WARNING'):
            report = evaluate(codebook, split, dataset)
        self.assertEqual(report.skipped_users, 2)
        self.assertEqual([record.user for record in report.per_user], [0])

    def test_missing_code(self):
        dataset, split, codebook = toy_setup(2, 2, [(0, 0, 4.0), (1, 1, 2.0)])
        partial = CodeBook(codebook.m, [0], codebook.user_codes[:1], [0, 1], codebook.item_codes)
        with self.assertRaisesMessage(MissingCodeError, 'user 1'):
            evaluate(partial, split, dataset)

    def test_popularity_and_activity(self):
        train = [(0, 0, 3.0), (0, 1, 3.0), (1, 0, 3.0)]
        dataset, split, codebook = toy_setup(2, 3, [(0, 2, 4.0), (1, 2, 5.0)], train_pairs=train)
        records = {record.user: record for record in evaluate(codebook, split, dataset).per_user}
        self.assertEqual(records[0].avg_item_popularity, 1.5)
        self.assertEqual(records[1].avg_item_popularity, 2.0)
        self.assertEqual((records[0].num_items, records[1].num_items), (3, 2))

    def test_random_codes_match_random_ranking(self):
        rng = np.random.default_rng(2)
        pairs = [
            (user, int(item), float(rng.integers(1, 6)))
            for user in range(50)
            for item in rng.choice(40, size=10, replace=False)
        ]
        dataset, split, codebook = toy_setup(50, 40, pairs, m=64, seed=3)
        report = evaluate(codebook, split, dataset, ks=(10,))
        baseline = random_baseline(split, k=10, draws=100_000, seed=4)
        self.assertLess(abs(report.ndcg_at[10] - baseline.mean), 3 * baseline.stderr)
        self.assertEqual(baseline.draws_per_user, 2000)

    def test_evaluate_is_pure(self):
        dataset, split, codebook = toy_setup(3, 5, [(0, 1, 4.0), (0, 3, 2.0), (1, 2, 5.0), (2, 4, 1.0), (2, 0, 3.0)])
        first = evaluate(codebook, split, dataset)
        second = evaluate(codebook, split, dataset)
        self.assertEqual(first.ndcg_at, second.ndcg_at)
        self.assertEqual(first.mrr, second.mrr)


def report_with(values, key_values=None):
    records = [
        UserRecord(user=user, ndcg={10: value}, mrr=1.0, avg_item_popularity=float(key), num_items=int(key), num_test=1)
        for user, (value, key) in enumerate(zip(values, key_values if key_values is not None else range(len(values))))
    ]
    return MetricsReport(ks=(10,), part='test', per_user=records)


class SeriesTests(SimpleTestCase):

    def test_window_one_is_identity_in_key_order(self):
        series = user_series(report_with([0.3, 0.1, 0.2], key_values=[2, 0, 1]), 'num_items', window=1)
        self.assertEqual(series['ndcg10'].tolist(), [0.1, 0.2, 0.3])
        self.assertEqual(series['num_items'].tolist(), [0, 1, 2])

    def test_constant_metric(self):
        series = user_series(report_with([0.4] * 7), 'avg_item_popularity', window=3)
        np.testing.assert_allclose(series['ndcg10'], 0.4)

    def test_centred_window(self):
        series = user_series(report_with([v / 10 for v in range(10)]), 'num_items', window=3)
        self.assertAlmostEqual(series['ndcg10'][5], 0.5)
        self.assertAlmostEqual(series['ndcg10'][0], 0.05)
        self.assertAlmostEqual(series['ndcg10'][9], 0.85)

    def test_wide_window_gives_global_mean(self):
        values = [0.0, 0.2, 0.9, 0.5]
        series = user_series(report_with(values), 'num_items', window=1000)
        np.testing.assert_allclose(series['ndcg10'], np.mean(values))
        self.assertAlmostEqual(series['ndcg10'].mean(), np.mean(values))

    def test_bad_arguments(self):
        with self.assertRaises(ValueError):
            user_series(report_with([0.1]), 'num_items', window=0)
        with self.assertRaises(ValueError):
            user_series(report_with([0.1]), 'colour')


class MetricOutputTests(TestCase):

    def setUp(self):
        self.report = MetricsReport(ks=(2, 10), part='test', ndcg_at={2: 0.5, 10: 0.6}, mrr=0.7)

    def test_metrics_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            frame = pd.read_csv(write_metrics_csv(self.report.rows('neuhash-cf', IN_MATRIX, 32), Path(tmp) / 'metrics.csv'))
        self.assertEqual(list(frame.columns), ['method', 'split', 'm', 'k', 'value'])
        self.assertEqual(frame['k'].astype(str).tolist(), ['2', '10', 'mrr'])
        self.assertEqual(frame['value'].tolist(), [0.5, 0.6, 0.7])

    def test_records(self):
        MetricRecord.record_report(self.report, 'neuhash-cf', IN_MATRIX, 32)
        self.assertEqual(MetricRecord.objects.count(), 3)
        mrr_record = MetricRecord.objects.get(metric='mrr')
        self.assertIsNone(mrr_record.k)
        self.assertEqual(mrr_record.value, 0.7)
