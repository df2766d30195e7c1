import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from .content import build_content, tokenize
from .datasets import IN_MATRIX, OUT_OF_MATRIX, RatingEvent
from .exceptions import EmptyAfterFilterError, EmptyInputError, MissingArtifactError, ParseError, SplitArgumentError
from .filtering import core_filter
from .ingest import deduplicate_events, load_ratings
from .splits import split_in_matrix, split_out_of_matrix
from .storage import load_dataset, load_split, save_dataset, save_split
from .synthetic import SyntheticSpec, generate_events


def event(user, item, rating=4.0, timestamp=0, review=None):
    return RatingEvent(user, item, rating, timestamp, review)


def clique(users, items, rating=4.0):
    return [event(f"u{u}", f"i{i}", rating, u * 100 + i) for u in range(users) for i in range(items)]


def synthetic_dataset(users=80, items=40, seed=0):
    spec = SyntheticSpec(users=users, items=items, vocab=60, topics=4, ratings_per_user=15, words_per_review=6, seed=seed)
    events = generate_events(spec)
    dataset = core_filter(events, min_user=5, min_item=5)
    return build_content(dataset, events, vocab_size=60, stopwords=frozenset()), events


class LoadRatingsTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def write(self, text, name='ratings.tsv'):
        path = Path(self.tmp.name) / name
        path.write_text(text, encoding='utf-8')
        return path

    def test_one_event_per_row(self):
        path = self.write("u1\ti1\t5\t10\tgreat\nu1\ti2\t3\t11\t\nu2\ti1\t4\t12\tok\n")
        events = load_ratings(path)
        self.assertEqual(len(events), 3)
        self.assertEqual(events[0], RatingEvent('u1', 'i1', 5.0, 10, 'great'))
        self.assertIsNone(events[1].review_text)

    def test_header_row_is_skipped(self):
        path = self.write("user_id,item_id,rating,timestamp,review_text\nu1,i1,5,10,nice\n", name='r.csv')
        events = load_ratings(path, format='csv')
        self.assertEqual(len(events), 1)
        self.assertEqual(events[0].line, 2)

    def test_latest_timestamp_survives_dedup(self):
        path = self.write("u1\ti1\t2\t10\nu1\ti1\t5\t20\n")
        events = deduplicate_events(load_ratings(path))
        self.assertEqual(len(events), 1)
        self.assertEqual(events[0].timestamp, 20)
        self.assertEqual(events[0].rating, 5.0)

    def test_dedup_keeps_later_row_on_timestamp_tie(self):
        events = deduplicate_events([event('u', 'i', 2.0, 7), event('u', 'i', 4.0, 7)])
        self.assertEqual(events[0].rating, 4.0)

    def test_bad_rating_names_the_line(self):
        path = self.write("u1\ti1\t5\t10\nu2\ti1\tabc\t11\n")
        with self.assertRaises(ParseError) as caught:
            load_ratings(path)
        self.assertEqual(caught.exception.line, 2)
        self.assertIn('line 2', str(caught.exception))

    def test_empty_file(self):
        with self.assertRaises(EmptyInputError):
            load_ratings(self.write(""))


class CoreFilterTests(SimpleTestCase):

    def test_fixed_point_is_unchanged(self):
        dataset = core_filter(clique(3, 3), min_user=2, min_item=2)
        self.assertEqual((dataset.num_users, dataset.num_items, len(dataset.ratings)), (3, 3, 9))

    def test_cascade_to_empty(self):
        events = [event('A', 'i1'), event('A', 'i2'), event('B', 'i1')]
        with self.assertRaises(EmptyAfterFilterError):
            core_filter(events, min_user=2, min_item=2)

    def test_survivors_meet_thresholds(self):
        events = clique(4, 4) + [event('lonely', 'i0'), event('u0', 'rare')]
        dataset = core_filter(events, min_user=3, min_item=3)
        self.assertNotIn('lonely', dataset.user_index)
        self.assertNotIn('rare', dataset.item_index)
        self.assertTrue((dataset.user_counts() >= 3).all())
        self.assertTrue((dataset.item_counts() >= 3).all())

    def test_dense_ids_follow_sorted_original_ids(self):
        dataset = core_filter([event('b', 'y'), event('a', 'x'), event('a', 'y'), event('b', 'x')], min_user=1, min_item=1)
        self.assertEqual(dataset.user_index, ['a', 'b'])
        self.assertEqual(dataset.item_index, ['x', 'y'])
        self.assertEqual(dataset.max_rating, 4.0)


class ContentTests(SimpleTestCase):

    def test_tokenize(self):
        self.assertEqual(tokenize("The Cat's 2 toys!", frozenset({'the'})), ['cat', 'toys'])

    def test_stopword_only_item_gets_zero_row(self):
        events = [event('u', 'i1', review='the'), event('u', 'i2', review='pizza')]
        dataset = core_filter(events, min_user=1, min_item=1)
        with self.assertLogs('corpus.content', level='WARNING'):
            dataset = build_content(dataset, events, stopwords=frozenset({'the'}))
        self.assertEqual(dataset.empty_content_items, 1)
        self.assertEqual(dataset.content[0].nnz, 0)
        self.assertEqual(dataset.content.shape, (2, 1))

    def test_all_stopword_corpus_gives_zero_width_content(self):
        events = [event('u', 'i1', review='the'), event('u', 'i2', review='a the')]
        dataset = core_filter(events, min_user=1, min_item=1)
        with self.assertLogs('corpus.content', level='WARNING'):
            dataset = build_content(dataset, events, stopwords=frozenset({'the'}))
        self.assertEqual(dataset.content.shape, (2, 0))
        self.assertEqual((dataset.vocab_size, dataset.empty_content_items), (0, 2))

    def test_disjoint_reviews(self):
        events = [event('u', 'i1', review='pizza'), event('u', 'i2', review='sushi')]
        dataset = build_content(core_filter(events, min_user=1, min_item=1), events, vocab_size=2, stopwords=frozenset())
        self.assertEqual(list(dataset.content.getnnz(axis=1)), [1, 1])

    def test_vocabulary_keeps_most_frequent_words(self):
        events = [
            event('u', 'i1', review='common rare'),
            event('u', 'i2', review='common other'),
            event('u', 'i3', review='common other'),
        ]
        dataset = build_content(core_filter(events, min_user=1, min_item=1), events, vocab_size=2, stopwords=frozenset())
        self.assertEqual(dataset.vocabulary, ['common', 'other'])

    def test_tfidf_matches_direct_computation(self):
        documents = {
            'a': 'apple apple banana',
            'b': 'banana cherry date',
            'c': 'cherry cherry cherry apple',
        }
        events = [event('u', item, review=text) for item, text in documents.items()]
        dataset = build_content(core_filter(events, min_user=1, min_item=1), events, stopwords=frozenset())

        vocabulary = sorted({word for text in documents.values() for word in text.split()})
        self.assertEqual(dataset.vocabulary, vocabulary)
        n = len(documents)
        for row, text in enumerate(documents.values()):
            words = text.split()
            weights = []
            for word in vocabulary:
                df = sum(word in other.split() for other in documents.values())
                weights.append(words.count(word) * (math.log((1 + n) / (1 + df)) + 1))
            norm = math.sqrt(sum(w * w for w in weights))
            np.testing.assert_allclose(dataset.content[row].toarray()[0], np.array(weights) / norm, atol=1e-12)


class SplitTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.dataset, _ = synthetic_dataset()

    def assertDisjoint(self, split):
        keys = [set(zip(split.part(name)['user'].tolist(), split.part(name)['item'].tolist())) for name in ('train', 'validation', 'test')]
        self.assertFalse(keys[0] & keys[1])
        self.assertFalse(keys[0] & keys[2])
        self.assertFalse(keys[1] & keys[2])
        self.assertEqual(sum(len(k) for k in keys), len(self.dataset.ratings))

    def test_in_matrix(self):
        split = split_in_matrix(self.dataset, seed=3)
        self.assertEqual(split.kind, IN_MATRIX)
        self.assertDisjoint(split)
        self.assertTrue(set(split.users_of('test')) <= set(split.users_of('train')))
        counts = self.dataset.user_counts()
        test_counts = np.bincount(split.test['user'], minlength=self.dataset.num_users)
        np.testing.assert_array_equal(test_counts, np.floor(counts * 0.5 + 0.5))

    def test_in_matrix_is_deterministic(self):
        first = split_in_matrix(self.dataset, seed=5)
        second = split_in_matrix(self.dataset, seed=5)
        for name in ('train', 'validation', 'test'):
            np.testing.assert_array_equal(first.part(name), second.part(name))

    def test_out_of_matrix_has_no_leak(self):
        split = split_out_of_matrix(self.dataset, seed=1)
        self.assertEqual(split.kind, OUT_OF_MATRIX)
        self.assertDisjoint(split)
        self.assertFalse(set(split.items_of('test')) & set(split.items_of('train')))
        self.assertFalse(set(split.items_of('validation')) & set(split.items_of('train')))

    def test_fractional_splits_share_test_items_and_nest(self):
        splits = [split_out_of_matrix(self.dataset, train_fraction=f, seed=2) for f in (0.1, 0.2, 0.3, 0.4, 0.5)]
        for split in splits[1:]:
            np.testing.assert_array_equal(split.items_of('test'), splits[0].items_of('test'))
            np.testing.assert_array_equal(split.items_of('validation'), splits[0].items_of('validation'))
        for smaller, larger in zip(splits, splits[1:]):
            self.assertTrue(set(smaller.items_of('train')) <= set(larger.items_of('train')))
            self.assertLess(len(smaller.items_of('train')), len(larger.items_of('train')))

    def test_bad_ratio(self):
        with self.assertRaises(SplitArgumentError):
            split_in_matrix(self.dataset, test_ratio=1.5)
        with self.assertRaises(SplitArgumentError):
            split_out_of_matrix(self.dataset, train_fraction=0)


class StorageTests(SimpleTestCase):

    def test_dataset_and_split_survive_disk(self):
        dataset, _ = synthetic_dataset(users=30, items=20)
        split = split_in_matrix(dataset, seed=0)
        with tempfile.TemporaryDirectory() as tmp:
            save_dataset(dataset, Path(tmp) / 'dataset')
            save_split(split, Path(tmp) / 'split')
            loaded = load_dataset(Path(tmp) / 'dataset')
            loaded_split = load_split(Path(tmp) / 'split')

        self.assertEqual(loaded.user_index, dataset.user_index)
        np.testing.assert_array_equal(loaded.ratings, dataset.ratings)
        self.assertEqual((loaded.content != dataset.content).nnz, 0)
        np.testing.assert_array_equal(loaded.idf, dataset.idf)
        np.testing.assert_array_equal(loaded_split.test, split.test)
        self.assertEqual(loaded_split.kind, split.kind)

    def test_missing_artifact_names_the_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            with self.assertRaises(MissingArtifactError) as caught:
                load_split(tmp)
        self.assertIn('manifest.json', str(caught.exception))


class SyntheticTests(SimpleTestCase):

    def test_parse(self):
        spec = SyntheticSpec.parse("users=50 items=30", seed=4)
        self.assertEqual((spec.users, spec.items, spec.seed), (50, 30, 4))
        with self.assertRaises(ValueError):
            SyntheticSpec.parse("colour=blue")

    def test_same_seed_same_events(self):
        spec = SyntheticSpec(users=10, items=8, vocab=20, topics=2, ratings_per_user=5, words_per_review=4, seed=9)
        self.assertEqual(generate_events(spec), generate_events(spec))
