import math
import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
import scipy.sparse as sp
from django.conf import settings
from django.test import SimpleTestCase

from corpus.content import build_content
from corpus.datasets import IN_MATRIX, Split, empty_triples, make_triples
from corpus.filtering import core_filter
from corpus.splits import split_in_matrix, split_out_of_matrix
from corpus.synthetic import SyntheticSpec, generate_events
from evaluation.report import evaluate, random_baseline
from neuhash.exceptions import ShapeError, UnknownItemError
from neuhash.network import INFER, RatingBatch, encode_items, forward_backward, sample_mu
from neuhash.params import CONTENT_AWARE, NO_CONTENT, ModelParams

from .exceptions import EmptyTrainingSetError, TrainingAborted
from .optim import AdamState, adam_step
from .trainer import (
    HISTORY_COLUMNS,
    EpochRecord,
    TrainConfig,
    TrainHistory,
    TrainSeeds,
    infer_codes,
    initial_params,
    train,
    write_history_csv,
)


def small_corpus(seed=0):
    spec = SyntheticSpec(users=40, items=30, vocab=40, topics=3, ratings_per_user=12, words_per_review=5, seed=seed)
    events = generate_events(spec)
    dataset = core_filter(events, min_user=3, min_item=3)
    dataset = build_content(dataset, events, vocab_size=40, stopwords=frozenset())
    return dataset, split_in_matrix(dataset, seed=seed)


def small_config(**overrides):
    values = dict(
        learning_rate=0.01, batch_size=50, max_epochs=3, m=8, hidden_sizes=(8,),
        noise_decay=0.99, alpha=0.01, seed=1,
    )
    values.update(overrides)
    return TrainConfig(**values)


def separable_corpus(seed=3):
    """Near-pure topics and noiseless ratings: a topic match rates 5, a mismatch 2."""
    spec = SyntheticSpec(
        users=120, items=60, vocab=40, topics=4, ratings_per_user=40, words_per_review=8,
        concentration=0.05, rating_noise=0.0, seed=seed,
    )
    events = generate_events(spec)
    dataset = core_filter(events, min_user=5, min_item=5)
    return build_content(dataset, events, vocab_size=40, stopwords=frozenset())


def learning_config(**overrides):
    values = dict(
        learning_rate=0.02, batch_size=100, max_epochs=30, m=16, hidden_sizes=(32,),
        noise_var_init=0.1, alpha=0.01, seed=0,
    )
    values.update(overrides)
    return TrainConfig(**values)


def held_out_ndcg10(params, dataset, split):
    codebook = infer_codes(params, dataset, users=split.users_of('test'), items=split.items_of('test'))
    return evaluate(codebook, split, dataset, ks=(10,)).ndcg_at[10]


def single_tensor(values):
    return ModelParams(NO_CONTENT, 3, {'E_user': np.array(values, dtype=np.float64)})


class AdamTests(SimpleTestCase):

    def test_zero_gradient_leaves_params(self):
        params = single_tensor([[0.5, -1.0, 2.0]])
        state = AdamState.for_params(params)
        for _ in range(3):
            adam_step(params, params.zeros_like(), state, lr=0.1)
        np.testing.assert_array_equal(params['E_user'], [[0.5, -1.0, 2.0]])
        self.assertEqual(state.step, 3)

    def test_first_step_moves_by_learning_rate(self):
        params = single_tensor([[0.0, 0.0, 0.0]])
        grads = single_tensor([[2.0, -3.0, 0.5]])
        adam_step(params, grads, AdamState.for_params(params), lr=0.01)
        np.testing.assert_allclose(params['E_user'], [[-0.01, 0.01, -0.01]], rtol=1e-6)

    def test_constant_gradient_keeps_step_size(self):
        params = single_tensor([[0.0, 0.0, 0.0]])
        grads = single_tensor([[1.0, 1.0, 1.0]])
        state = AdamState.for_params(params)
        for _ in range(50):
            adam_step(params, grads, state, lr=0.001)
        np.testing.assert_allclose(params['E_user'], -0.05, rtol=1e-5)

    def test_mismatched_gradients(self):
        params = single_tensor([[0.0, 0.0, 0.0]])
        with self.assertRaises(ShapeError):
            adam_step(params, single_tensor([[0.0, 0.0]]), AdamState.for_params(params), lr=0.1)
        extra = ModelParams(NO_CONTENT, 3, {'E_user': np.zeros((1, 3)), 'E_item': np.zeros((1, 3))})
        with self.assertRaises(ShapeError):
            adam_step(params, extra, AdamState.for_params(params), lr=0.1)


class TrainConfigTests(SimpleTestCase):

    def test_defaults(self):
        config = TrainConfig()
        self.assertEqual(config.batch_size, 2000)
        self.assertEqual(config.hidden_sizes, (1000, 1000))
        self.assertEqual(config.to_dict()['hidden_sizes'], [1000, 1000])

    def test_invalid_values(self):
        for bad in ({'learning_rate': 0}, {'batch_size': 0}, {'noise_decay': 1.5}, {'max_epochs': -1}, {'variant': 'other'}):
            with self.subTest(bad=bad), self.assertRaises(ValueError):
                TrainConfig(**bad)

    def test_hyper_carries_noise(self):
        hyper = TrainConfig(alpha=0.2, noise_decay=0.5).hyper(0.25)
        self.assertEqual((hyper.alpha, hyper.noise_var, hyper.anneal_factor), (0.2, 0.25, 0.5))


class TrainTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.dataset, cls.split = small_corpus()
        cls.params, cls.history = train(cls.split, cls.dataset, small_config())

    def test_zero_epochs_returns_initial_params(self):
        config = small_config(max_epochs=0)
        params, history = train(self.split, self.dataset, config)
        expected = initial_params(self.dataset, config, TrainSeeds.from_seed(config.seed).init)
        self.assertEqual(history.records, [])
        for name in expected:
            np.testing.assert_array_equal(params[name], expected[name])

    def test_noise_follows_the_annealing_schedule(self):
        for record in self.history.records:
            self.assertAlmostEqual(record.sigma2, self.history.expected_sigma2(record.batches), delta=1e-12)
        batches_per_epoch = math.ceil(len(self.split.train) / 50)
        self.assertEqual(self.history.records[-1].batches, 3 * batches_per_epoch)

    def test_best_epoch_has_the_highest_validation_score(self):
        scores = [record.val_ndcg10 for record in self.history.records]
        self.assertEqual(self.history.best_val_ndcg10, max(scores))
        self.assertEqual(self.history.best_epoch, scores.index(max(scores)) + 1)

    def test_best_sigma2_is_taken_from_the_best_epoch(self):
        self.assertEqual(self.history.best_sigma2(), self.history.records[self.history.best_epoch - 1].sigma2)
        history = TrainHistory(1.0, 0.5)
        self.assertEqual(history.best_sigma2(), 1.0)
        history.records = [EpochRecord(epoch, 0.0, 0.0, 0.0, 0.0, 0.0, sigma2=0.5 ** epoch, batches=epoch) for epoch in (1, 2, 3)]
        self.assertEqual(history.best_sigma2(), 0.125)
        history.best_epoch = 2
        self.assertEqual(history.best_sigma2(), 0.25)

    def test_returned_params_reproduce_the_best_score(self):
        codebook = infer_codes(
            self.params, self.dataset,
            users=self.split.users_of('validation'), items=self.split.items_of('validation'),
        )
        score = evaluate(codebook, self.split, self.dataset, ks=(10,), part='validation').ndcg_at[10]
        self.assertEqual(score, self.history.best_val_ndcg10)

    def test_trained_codes_for_repeated_content_match(self):
        seen = int(self.split.items_of('train')[0])
        codebook = infer_codes(self.params, self.dataset, extra_content=self.dataset.content[seen])
        self.assertEqual(codebook.item_code(self.dataset.num_items), codebook.item_code(seen))

    def test_same_seed_same_run(self):
        params, history = train(self.split, self.dataset, small_config())
        for name in params:
            np.testing.assert_array_equal(params[name], self.params[name])
        self.assertEqual(
            [record.loss_total for record in history.records],
            [record.loss_total for record in self.history.records],
        )

    def test_loss_decreases(self):
        _, history = train(self.split, self.dataset, small_config(max_epochs=8, eval_every=8))
        self.assertLess(history.records[-1].loss_total, history.records[0].loss_total)

    def test_no_content_variant(self):
        params, history = train(self.split, self.dataset, small_config(variant=NO_CONTENT, max_epochs=2))
        self.assertEqual(params.num_items, self.dataset.num_items)
        self.assertEqual(len(history.records), 2)

    def test_empty_training_set(self):
        split = Split(kind=IN_MATRIX, train=empty_triples(), validation=empty_triples(), test=self.split.test, seed=0)
        with self.assertRaises(EmptyTrainingSetError):
            train(split, self.dataset, small_config())

    def test_content_aware_needs_content(self):
        bare = core_filter(generate_events(SyntheticSpec(users=10, items=8, vocab=10, topics=2, ratings_per_user=5)), 1, 1)
        split = split_in_matrix(bare, seed=0)
        with self.assertRaises(ShapeError):
            train(split, bare, small_config())

    def test_content_aware_needs_a_vocabulary(self):
        bare = self.dataset.with_content(
            sp.csr_matrix((self.dataset.num_items, 0)), [], np.zeros(0), empty_content_items=self.dataset.num_items,
        )
        with self.assertRaises(ShapeError):
            train(self.split, bare, small_config())
        params, _ = train(self.split, bare, small_config(variant=NO_CONTENT, max_epochs=1))
        self.assertEqual(params.num_items, bare.num_items)

    def test_non_finite_loss_aborts_with_history(self):
        train_part = make_triples([0, 1, 2], [0, 1, 2], [3.0, np.nan, 4.0])
        split = Split(kind=IN_MATRIX, train=train_part, validation=empty_triples(), test=empty_triples(), seed=0)
        with self.assertRaises(TrainingAborted) as caught:
            train(split, self.dataset, small_config(variant=NO_CONTENT, batch_size=10))
        self.assertEqual(caught.exception.batch_index, 0)
        self.assertEqual(caught.exception.history.records, [])

    def test_history_csv(self):
        with tempfile.TemporaryDirectory() as tmp:
            frame = pd.read_csv(write_history_csv(self.history, Path(tmp) / 'history.csv'))
        self.assertEqual(list(frame.columns), HISTORY_COLUMNS)
        self.assertEqual(frame['epoch'].tolist(), [1, 2, 3])


class InferTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.dataset, cls.split = small_corpus(seed=2)
        cls.config = small_config()
        cls.params = initial_params(cls.dataset, cls.config, np.random.default_rng(0))

    def test_codes_are_deterministic(self):
        first = infer_codes(self.params, self.dataset)
        second = infer_codes(self.params, self.dataset)
        self.assertTrue(first.equals(second))
        self.assertEqual((first.num_users, first.num_items), (self.dataset.num_users, self.dataset.num_items))

    def test_chunking_does_not_change_codes(self):
        whole = infer_codes(self.params, self.dataset)
        with self.settings(NEUHASH={**settings.NEUHASH, 'INFER_CHUNK': 3}):
            chunked = infer_codes(self.params, self.dataset)
        self.assertTrue(whole.equals(chunked))

    def test_unseen_item_with_known_content_shares_its_code(self):
        extra = self.dataset.content[4]
        codebook = infer_codes(self.params, self.dataset, extra_content=extra)
        new_item = self.dataset.num_items
        self.assertEqual(codebook.item_code(new_item), codebook.item_code(4))

    def test_no_content_cannot_code_unseen_items(self):
        params = initial_params(self.dataset, small_config(variant=NO_CONTENT), np.random.default_rng(0))
        with self.assertRaises(UnknownItemError):
            infer_codes(params, self.dataset, items=[self.dataset.num_items])
        with self.assertRaises(ShapeError):
            infer_codes(params, self.dataset, extra_content=self.dataset.content[0])


class LearningSignalTests(SimpleTestCase):
    """Ratings follow item topics, so trained codes must rank far better than chance."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.dataset = separable_corpus()
        cls.split = split_in_matrix(cls.dataset, seed=0)
        cls.config = learning_config()
        cls.params, cls.history = train(cls.split, cls.dataset, cls.config)

    def rating_loss_of(self, params):
        batch = RatingBatch.from_triples(self.split.train, self.dataset.max_rating)
        result = forward_backward(batch, params, self.config.hyper(0.0), rng=np.random.default_rng(0), content=self.dataset.content)
        return result.parts['rating']

    def test_rating_loss_at_least_halves(self):
        initial = initial_params(self.dataset, self.config, TrainSeeds.from_seed(self.config.seed).init)
        self.assertLess(self.rating_loss_of(self.params), 0.5 * self.rating_loss_of(initial))

    def test_ranking_beats_random_order(self):
        baseline = random_baseline(self.split, k=10, draws=20_000)
        self.assertGreaterEqual(held_out_ndcg10(self.params, self.dataset, self.split), baseline.mean + 0.1)

    def test_different_content_keeps_different_codes(self):
        codes = encode_items(self.params, self.dataset.content, sample_mu(self.config.m, INFER)).z
        self.assertGreaterEqual(len(np.unique(codes, axis=0)), 4)

    def test_content_codes_beat_random_codes_for_cold_items(self):
        split = split_out_of_matrix(self.dataset, train_fraction=0.5, seed=0)
        scores = {}
        for variant in (CONTENT_AWARE, NO_CONTENT):
            params, _ = train(split, self.dataset, learning_config(variant=variant))
            # no-content rows of unseen items never get a gradient, so their codes stay random
            scores[variant] = held_out_ndcg10(params, self.dataset, split)
        self.assertGreaterEqual(scores[CONTENT_AWARE], scores[NO_CONTENT] + 0.1)
