import tempfile
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from django.test import SimpleTestCase

from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .exceptions import CheckpointFormatError, NumericError, ShapeError, UnknownItemError, UnknownUserError
from .network import (
    INFER,
    TRAIN,
    Hyper,
    RatingBatch,
    SampleDraws,
    add_noise,
    content_loss,
    encode_item,
    encode_item_id,
    encode_items,
    encode_user,
    forward_backward,
    kl_bernoulli,
    loss_and_grads,
    rating_loss,
    sample_codes,
    sample_mu,
    scale_rating,
)
from .params import CONTENT_AWARE, NO_CONTENT, init_params

NUM_USERS, NUM_ITEMS, VOCAB, M = 5, 5, 20, 8


def toy_content(seed=0):
    rng = np.random.default_rng(seed)
    dense = rng.random((NUM_ITEMS, VOCAB)) * (rng.random((NUM_ITEMS, VOCAB)) < 0.3)
    dense[np.arange(NUM_ITEMS), np.arange(NUM_ITEMS)] += 0.5
    dense /= np.linalg.norm(dense, axis=1, keepdims=True)
    return sp.csr_matrix(dense)


def toy_batch(seed=0, size=12):
    rng = np.random.default_rng(seed)
    return RatingBatch(
        users=rng.integers(0, NUM_USERS, size),
        items=rng.integers(0, NUM_ITEMS, size),
        ratings=rng.integers(1, 6, size).astype(np.float64),
        max_rating=5.0,
    )


def toy_params(variant=CONTENT_AWARE, seed=0, hidden_sizes=(6, 6)):
    return init_params(
        np.random.default_rng(seed), variant, M,
        num_users=NUM_USERS, vocab_size=VOCAB, num_items=NUM_ITEMS, hidden_sizes=hidden_sizes,
    )


class SamplingTests(SimpleTestCase):

    def test_infer_mu_is_half(self):
        np.testing.assert_array_equal(sample_mu(4, INFER), np.full(4, 0.5))
        self.assertEqual(sample_mu(4, TRAIN, np.random.default_rng(0), rows=3).shape, (3, 4))

    def test_sample_codes_tie_goes_negative(self):
        np.testing.assert_array_equal(sample_codes(np.array([0.5, 0.51, 0.2]), 0.5), [-1.0, 1.0, -1.0])

    def test_scale_rating_spans_code_range(self):
        self.assertEqual(scale_rating(5.0, 5.0, 32), 32.0)
        self.assertEqual(scale_rating(0.0, 5.0, 32), -32.0)
        self.assertEqual(scale_rating(2.5, 5.0, 32), 0.0)

    def test_add_noise(self):
        z = np.array([1.0, -1.0, 1.0, -1.0])
        np.testing.assert_array_equal(add_noise(z, 0.0, np.random.default_rng(0)), z)
        np.testing.assert_array_equal(add_noise(z, 0.3, np.random.default_rng(1)), add_noise(z, 0.3, np.random.default_rng(1)))
        draws = add_noise(np.zeros((100_000, 2)), 0.5, np.random.default_rng(2))
        self.assertTrue((np.abs(draws.mean(axis=0)) < 4 * 0.5 / np.sqrt(100_000)).all())
        with self.assertRaises(ValueError):
            add_noise(z, -0.1, np.random.default_rng(0))

    def test_rating_loss(self):
        z = np.ones(4)
        self.assertEqual(rating_loss(z, z, 4.0), 0.0)
        self.assertEqual(rating_loss(z, -z, 4.0), 64.0)


class KLTests(SimpleTestCase):

    def test_matches_direct_evaluation_on_grid(self):
        q = np.arange(1, 1000) / 1000.0
        direct = q * np.log(q / 0.5) + (1 - q) * np.log((1 - q) / 0.5)
        np.testing.assert_allclose(kl_bernoulli(q[:, None]), direct, rtol=0, atol=1e-10)

    def test_single_bit(self):
        self.assertAlmostEqual(kl_bernoulli(np.array([0.75])), 0.13081, places=5)

    def test_zero_at_prior_and_non_negative(self):
        self.assertEqual(kl_bernoulli(np.full(16, 0.5)), 0.0)
        q = np.linspace(0.0, 1.0, 101)[:, None]
        self.assertTrue((kl_bernoulli(q) >= 0).all())
        self.assertTrue(np.isfinite(kl_bernoulli(q)).all())


class EncoderTests(SimpleTestCase):

    def setUp(self):
        self.params = toy_params()
        self.content = toy_content()

    def test_user_codes_are_deterministic_at_half(self):
        mu = sample_mu(M, INFER)
        first = encode_user(np.arange(NUM_USERS), self.params, mu)
        second = encode_user(np.arange(NUM_USERS), self.params, mu)
        np.testing.assert_array_equal(first.z, second.z)
        self.assertTrue(set(np.unique(first.z)) <= {-1.0, 1.0})

    def test_identical_content_gives_identical_code(self):
        mu = sample_mu(M, INFER)
        row = self.content[2]
        batched = encode_items(self.params, sp.vstack([self.content, row]), mu)
        np.testing.assert_array_equal(batched.z[2], batched.z[-1])
        np.testing.assert_array_equal(encode_item(row.toarray()[0], self.params, mu).z, batched.z[2])

    def test_unknown_user(self):
        with self.assertRaises(UnknownUserError):
            encode_user(np.array([NUM_USERS]), self.params, 0.5)

    def test_content_width_is_checked(self):
        with self.assertRaises(ShapeError):
            encode_item(np.ones(VOCAB + 1), self.params, 0.5)

    def test_no_content_item_lookup(self):
        params = toy_params(NO_CONTENT)
        codes = encode_item_id(np.arange(NUM_ITEMS), params, sample_mu(M, INFER))
        self.assertEqual(codes.z.shape, (NUM_ITEMS, M))
        with self.assertRaises(UnknownItemError):
            encode_item_id(np.array([NUM_ITEMS]), params, 0.5)
        with self.assertRaises(ShapeError):
            encode_item(np.ones(VOCAB), params, 0.5)

    def test_importance_weights_start_at_one(self):
        np.testing.assert_array_equal(self.params['w_imp'], np.ones(VOCAB))
        # distinct content must already move the bit probabilities apart
        q = encode_items(self.params, self.content, sample_mu(M, INFER)).q
        self.assertGreater(q.std(axis=0).mean(), 0.005)

    def test_zero_encoder_gives_half_probabilities(self):
        params = toy_params()
        for name in params:
            if name[0] in 'Wb':
                params[name][:] = 0.0
        samples = encode_item(toy_content()[0], params, sample_mu(M, INFER))
        np.testing.assert_array_equal(samples.q, np.full(M, 0.5))
        np.testing.assert_array_equal(samples.z, -np.ones(M))

    def test_empty_content_has_no_loss(self):
        with self.assertLogs('neuhash.network', level='WARNING'):
            self.assertEqual(content_loss(np.ones(M), np.zeros(VOCAB), self.params), 0.0)


class GradientTests(SimpleTestCase):
    """Analytic gradients of the surrogate loss against central differences."""

    STEP = 1e-5

    def check_gradients(self, params, content, hyper):
        batch = toy_batch()
        result = forward_backward(batch, params, hyper, rng=np.random.default_rng(1), content=content)
        draws = result.draws

        for name in params:
            numeric = np.zeros_like(params[name])
            for index in np.ndindex(params[name].shape):
                original = params[name][index]
                params[name][index] = original + self.STEP
                plus, _ = loss_and_grads(batch, params, hyper, content=content, draws=draws)
                params[name][index] = original - self.STEP
                minus, _ = loss_and_grads(batch, params, hyper, content=content, draws=draws)
                params[name][index] = original
                numeric[index] = (plus - minus) / (2 * self.STEP)
            np.testing.assert_allclose(result.grads[name], numeric, rtol=1e-4, atol=1e-7, err_msg=name)

    def test_content_aware(self):
        self.check_gradients(toy_params(), toy_content(), Hyper(alpha=0.3, noise_var=0.5))

    def test_single_hidden_layer(self):
        self.check_gradients(toy_params(hidden_sizes=(7,)), toy_content(), Hyper(alpha=0.1, noise_var=0.2, kl_weight=0.5))

    def test_no_content(self):
        self.check_gradients(toy_params(NO_CONTENT), None, Hyper(alpha=0.3, noise_var=0.5))


class ForwardTests(SimpleTestCase):

    def test_fixed_draws_reproduce_the_loss(self):
        params, content, batch = toy_params(), toy_content(), toy_batch()
        draws = SampleDraws.draw(np.random.default_rng(4), len(batch), M)
        first = forward_backward(batch, params, Hyper(), content=content, draws=draws)
        second = forward_backward(batch, params, Hyper(), content=content, draws=draws)
        self.assertEqual(first.loss, second.loss)
        self.assertEqual(set(first.parts), {'rating', 'kl_user', 'kl_item', 'content'})

    def test_noise_free_codes_at_prior(self):
        # all q = 0.5 and mu = 0.5: every bit is -1, KL vanishes
        params = toy_params(NO_CONTENT)
        params['E_user'][:] = 0.0
        params['E_item'][:] = 0.0
        batch = toy_batch()
        size = len(batch)
        draws = SampleDraws(np.full((size, M), 0.5), np.full((size, M), 0.5), np.zeros((size, M)), np.zeros((size, M)))
        result = forward_backward(batch, params, Hyper(noise_var=0.0), draws=draws)
        expected = np.mean((scale_rating(batch.ratings, 5.0, M) - M) ** 2)
        self.assertAlmostEqual(result.loss, expected, places=10)

    def test_loss_is_linear_in_alpha(self):
        params, content, batch = toy_params(), toy_content(), toy_batch()
        draws = SampleDraws.draw(np.random.default_rng(5), len(batch), M)
        results = [forward_backward(batch, params, Hyper(alpha=alpha), content=content, draws=draws) for alpha in (0.0, 1.0, 0.25)]
        low, high, mid = results
        self.assertAlmostEqual(mid.loss, low.loss + 0.25 * (high.loss - low.loss), places=10)
        for name in params:
            np.testing.assert_allclose(mid.grads[name], low.grads[name] + 0.25 * (high.grads[name] - low.grads[name]), atol=1e-12)

    def test_non_finite_loss_names_the_batch(self):
        params = toy_params()
        params['E_user'][0] = np.nan
        batch = toy_batch()
        batch.users[:] = 0
        batch.index = 7
        with self.assertRaises(NumericError) as caught:
            forward_backward(batch, params, Hyper(), rng=np.random.default_rng(0), content=toy_content())
        self.assertEqual(caught.exception.batch_index, 7)

    def test_annealed(self):
        hyper = Hyper(noise_var=1.0, anneal_factor=0.5).annealed().annealed()
        self.assertEqual(hyper.noise_var, 0.25)
        with self.assertRaises(ValueError):
            Hyper(anneal_factor=0.0)


class CheckpointTests(SimpleTestCase):

    def test_save_load_is_exact_and_deterministic(self):
        checkpoint = Checkpoint(toy_params(), Hyper(alpha=0.01), seeds={'seed': 3}, extra={'best_epoch': 2})
        with tempfile.TemporaryDirectory() as tmp:
            first = save_checkpoint(Path(tmp) / 'a.bin', checkpoint).read_bytes()
            second = save_checkpoint(Path(tmp) / 'b.bin', checkpoint).read_bytes()
            loaded = load_checkpoint(Path(tmp) / 'a.bin')
        self.assertEqual(first, second)
        self.assertEqual(loaded.hyper, checkpoint.hyper)
        self.assertEqual(loaded.seeds, {'seed': 3})
        self.assertEqual(loaded.params.hidden_sizes, [6, 6])
        for name in checkpoint.params:
            np.testing.assert_array_equal(loaded.params[name], checkpoint.params[name])

    def test_rejects_foreign_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'junk.bin'
            path.write_bytes(b'NOTACKPT' + bytes(16))
            with self.assertRaises(CheckpointFormatError):
                load_checkpoint(path)

    def test_shape_check(self):
        params = toy_params()
        params['E_word'] = params['E_word'][:, :-1]
        with self.assertRaises(ShapeError):
            params.check()
