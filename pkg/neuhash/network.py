"""
NeuHash-CF forward pass, variational loss and backpropagation.

Item codes come from content (or an item embedding in the no-content variant),
user codes from a user embedding. Per bit, a code is sampled as

    z = 2 * ceil(q - mu) - 1        (q - mu == 0 gives -1)

with mu ~ U[0, 1] while training and mu = 0.5 for deterministic inference.
Gradients pass the sampling step straight through: dz/dq := 2, i.e. the
forward value is z but the backward pass sees 2q - 1.

Loss per (user, item, rating) example, averaged over the batch:

    (R_hat - zn_u . zn_i)^2 + kl_weight * (KL_u + KL_i)
        + alpha * (content_nll + kl_weight * KL_i)

where zn_* are the codes after Gaussian noise infusion and R_hat is the
rating mapped onto [-m, m].
"""
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.special import expit, log_softmax, softmax

from .exceptions import NumericError, ShapeError, UnknownItemError, UnknownUserError

logger = logging.getLogger(__name__)

TRAIN = 'train'
INFER = 'infer'

PRIOR = 0.5
PROB_CLAMP = 1e-7


@dataclass
class Hyper:
    alpha: float = 0.001
    noise_var: float = 1.0
    anneal_factor: float = 0.9999
    kl_weight: float = 1.0

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.noise_var < 0:
            raise ValueError("noise_var must be >= 0")
        if not 0 < self.anneal_factor <= 1:
            raise ValueError("anneal_factor must be in (0, 1]")

    def annealed(self):
        return Hyper(self.alpha, self.noise_var * self.anneal_factor, self.anneal_factor, self.kl_weight)


@dataclass
class CodeSamples:
    q: np.ndarray
    z: np.ndarray
    mu: np.ndarray


@dataclass
class RatingBatch:
    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    max_rating: float
    index: int = 0

    @classmethod
    def from_triples(cls, triples, max_rating, index=0):
        return cls(
            users=np.asarray(triples['user'], dtype=np.int64),
            items=np.asarray(triples['item'], dtype=np.int64),
            ratings=np.asarray(triples['rating'], dtype=np.float64),
            max_rating=max_rating,
            index=index,
        )

    def __len__(self):
        return len(self.users)


@dataclass
class SampleDraws:
    """
    Randomness of one step. The offsets freeze the straight-through
    correction z - (2q - 1); with them set, the loss is a smooth function of
    the parameters (used by finite-difference checks).
    """
    mu_user: np.ndarray
    mu_item: np.ndarray
    eps_user: np.ndarray
    eps_item: np.ndarray
    offset_user: Optional[np.ndarray] = None
    offset_item: Optional[np.ndarray] = None

    @classmethod
    def draw(cls, rng, rows, m):
        return cls(
            mu_user=rng.random((rows, m)),
            mu_item=rng.random((rows, m)),
            eps_user=rng.standard_normal((rows, m)),
            eps_item=rng.standard_normal((rows, m)),
        )


@dataclass
class StepResult:
    loss: float
    grads: object
    parts: dict
    draws: SampleDraws


# Sampling and small building blocks

def sample_mu(m, mode, rng=None, rows=None):
    shape = (m,) if rows is None else (rows, m)
    if mode == INFER:
        return np.full(shape, 0.5)
    if mode == TRAIN:
        return rng.random(shape)
    raise ValueError(f"unknown sampling mode: {mode}")


def sample_codes(q, mu):
    return np.where(q - mu > 0, 1.0, -1.0)


def add_noise(z, sigma2, rng):
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    return z + rng.standard_normal(np.shape(z)) * sigma2


def kl_bernoulli(q, p=PRIOR):
    """KL(Bernoulli(q) || Bernoulli(p)) summed over the last axis."""
    q = np.clip(q, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return np.sum(q * np.log(q / p) + (1.0 - q) * np.log((1.0 - q) / p), axis=-1)


def _kl_grad(q):
    inside = (q > PROB_CLAMP) & (q < 1.0 - PROB_CLAMP)
    clamped = np.clip(q, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return np.where(inside, np.log(clamped) - np.log1p(-clamped), 0.0)


def scale_rating(rating, max_rating, m):
    if max_rating <= 0:
        raise ValueError("max_rating must be > 0")
    return 2.0 * m * np.asarray(rating, dtype=np.float64) / max_rating - m


def rating_loss(z_u, z_i, r_hat):
    return (r_hat - np.sum(np.asarray(z_u) * np.asarray(z_i), axis=-1)) ** 2


# Encoders

def _as_rows(content, vocab_size):
    rows = content if sp.issparse(content) else sp.csr_matrix(np.atleast_2d(np.asarray(content, dtype=np.float64)))
    rows = sp.csr_matrix(rows, dtype=np.float64)
    if rows.shape[1] != vocab_size:
        raise ShapeError(f"content has {rows.shape[1]} columns, model expects n={vocab_size}")
    return rows


def _content_forward(params, rows):
    """Item encoder over CSR rows; returns logits and the activations backprop needs."""
    weighted = (rows @ sp.diags(params['w_imp'])).tocsr()
    hidden = weighted
    pre, acts = [], []
    for layer in range(1, params.depth):
        a = np.asarray(hidden @ params[f"W{layer}"].T) + params[f"b{layer}"]
        pre.append(a)
        hidden = np.maximum(a, 0.0)
        acts.append(hidden)
    last = params.depth
    logits = np.asarray(hidden @ params[f"W{last}"].T) + params[f"b{last}"]
    return logits, (rows, weighted, pre, acts)


def _check_index(index, size, error_cls, label):
    index = np.asarray(index, dtype=np.int64)
    bad = (index < 0) | (index >= size)
    if np.any(bad):
        first = int(index.reshape(-1)[bad.reshape(-1)][0])
        raise error_cls(f"unknown {label} index {first} (have {size})")
    return index


def _encode_embedding(table, index, mu, error_cls, label):
    index = _check_index(index, table.shape[0], error_cls, label)
    q = expit(table[index])
    return CodeSamples(q=q, z=sample_codes(q, mu), mu=mu)


def encode_user(u, params, mu):
    return _encode_embedding(params['E_user'], u, mu, UnknownUserError, 'user')


def encode_item_id(i, params, mu):
    """No-content variant: the item code is an embedding lookup, like a user code."""
    if params.is_content_aware:
        raise ShapeError("content-aware items are encoded from content; use encode_item")
    return _encode_embedding(params['E_item'], i, mu, UnknownItemError, 'item')


def encode_item(c_i, params, mu):
    """Encode one content vector (sparse row or dense length-n vector)."""
    if not params.is_content_aware:
        raise ShapeError("the no-content variant has no content encoder; use encode_item_id")
    rows = _as_rows(c_i, params.vocab_size)
    if rows.shape[0] != 1:
        raise ShapeError(f"encode_item takes one content vector, got {rows.shape[0]}")
    logits, _ = _content_forward(params, rows)
    q = expit(logits[0])
    return CodeSamples(q=q, z=sample_codes(q, mu), mu=mu)


def encode_items(params, content_rows, mu):
    """Batched encode_item; `mu` broadcasts against (rows, m)."""
    logits, _ = _content_forward(params, _as_rows(content_rows, params.vocab_size))
    q = expit(logits)
    return CodeSamples(q=q, z=sample_codes(q, mu), mu=mu)


# Content decoder

def _word_logits(z_i, params):
    projected = np.asarray(z_i) @ params['E_word'].T
    return projected * params['w_imp'] + params['b_word'], projected


def word_log_probs(z_i, params):
    """log softmax over the full vocabulary for each item code."""
    logits, _ = _word_logits(z_i, params)
    return log_softmax(logits, axis=-1)


def _observed_words(rows):
    """(row, column) pairs of the non-zero content entries."""
    rows = rows.tocoo()
    keep = rows.data != 0
    return rows.row[keep], rows.col[keep]


def content_loss(z_i, c_i, params):
    """Negative log likelihood of the item's observed words given its code."""
    rows = _as_rows(c_i, params.vocab_size)
    _, words = _observed_words(rows)
    if len(words) == 0:
        logger.warning("content_loss on an item without content words; returning 0")
        return 0.0
    return float(-np.sum(word_log_probs(z_i, params)[words]))


# Loss and gradients

def forward_backward(batch, params, hyper, rng=None, content=None, draws=None):
    """
    One Monte-Carlo sample of every code, noise on both codes, the combined
    loss averaged over the batch, and exact gradients of that surrogate.
    `content` is the |I| x n CSR matrix (content-aware variant only).
    """
    size = len(batch)
    if size == 0:
        raise ValueError("empty batch")
    m = params.m
    scale = 1.0 / size
    alpha = hyper.alpha if params.is_content_aware else 0.0
    kl_weight = hyper.kl_weight

    if draws is None:
        draws = SampleDraws.draw(rng, size, m)
    users = _check_index(batch.users, params.num_users, UnknownUserError, 'user')

    # encoders
    q_u = expit(params['E_user'][users])
    if params.is_content_aware:
        if content is None:
            raise ShapeError("content-aware training needs the item content matrix")
        items = _check_index(batch.items, content.shape[0], UnknownItemError, 'item')
        item_rows = _as_rows(content[items], params.vocab_size)
        item_logits, cache = _content_forward(params, item_rows)
    else:
        items = _check_index(batch.items, params.num_items, UnknownItemError, 'item')
        item_logits = params['E_item'][items]
    q_i = expit(item_logits)

    # straight-through sampling
    if draws.offset_user is None:
        draws.offset_user = sample_codes(q_u, draws.mu_user) - (2.0 * q_u - 1.0)
        draws.offset_item = sample_codes(q_i, draws.mu_item) - (2.0 * q_i - 1.0)
    z_u = 2.0 * q_u - 1.0 + draws.offset_user
    z_i = 2.0 * q_i - 1.0 + draws.offset_item

    # noise infusion
    zn_u = z_u + draws.eps_user * hyper.noise_var
    zn_i = z_i + draws.eps_item * hyper.noise_var

    # rating decoder
    r_hat = scale_rating(batch.ratings, batch.max_rating, m)
    error = r_hat - np.sum(zn_u * zn_i, axis=1)
    rating_terms = error ** 2

    kl_user = kl_bernoulli(q_u)
    kl_item = kl_bernoulli(q_i)

    content_terms = np.zeros(size)
    grads = params.zeros_like()
    d_zn_i = np.zeros_like(zn_i)

    # content decoder
    if params.is_content_aware:
        word_rows, word_cols = _observed_words(item_rows)
        logits, projected = _word_logits(zn_i, params)
        log_probs = log_softmax(logits, axis=1)
        content_terms = -np.bincount(word_rows, weights=log_probs[word_rows, word_cols], minlength=size)
        if alpha > 0:
            observed = np.bincount(word_rows, minlength=size).astype(np.float64)
            d_logits = softmax(logits, axis=1) * (alpha * scale * observed)[:, None]
            d_logits[word_rows, word_cols] -= alpha * scale
            grads['b_word'] = d_logits.sum(axis=0)
            grads['w_imp'] = np.sum(d_logits * projected, axis=0)
            d_projected = d_logits * params['w_imp']
            grads['E_word'] = d_projected.T @ zn_i
            d_zn_i += d_projected @ params['E_word']

    per_example = (
        rating_terms
        + kl_weight * (kl_user + kl_item)
        + alpha * (content_terms + kl_weight * kl_item)
    )
    loss = float(np.mean(per_example))
    if not np.isfinite(loss):
        raise NumericError("non-finite loss", batch_index=batch.index)

    # rating decoder backward
    d_error = -2.0 * error * scale
    d_zn_u = d_error[:, None] * zn_i
    d_zn_i += d_error[:, None] * zn_u

    # straight-through: dz/dq = 2; noise is additive
    d_q_u = 2.0 * d_zn_u + scale * kl_weight * _kl_grad(q_u)
    d_q_i = 2.0 * d_zn_i + scale * kl_weight * (1.0 + alpha) * _kl_grad(q_i)
    d_logit_u = d_q_u * q_u * (1.0 - q_u)
    d_logit_i = d_q_i * q_i * (1.0 - q_i)

    np.add.at(grads['E_user'], users, d_logit_u)
    if params.is_content_aware:
        _content_backward(params, grads, cache, d_logit_i)
    else:
        np.add.at(grads['E_item'], items, d_logit_i)

    parts = {
        'rating': float(np.mean(rating_terms)),
        'kl_user': float(np.mean(kl_user)),
        'kl_item': float(np.mean(kl_item)),
        'content': float(np.mean(content_terms)),
    }
    return StepResult(loss=loss, grads=grads, parts=parts, draws=draws)


def _content_backward(params, grads, cache, d_logits):
    rows, weighted, pre, acts = cache
    last = params.depth
    inputs = [weighted, *acts]

    delta = d_logits
    for layer in range(last, 0, -1):
        layer_input = inputs[layer - 1]
        if sp.issparse(layer_input):
            grads[f"W{layer}"] = np.asarray((layer_input.T @ delta).T)
        else:
            grads[f"W{layer}"] = delta.T @ layer_input
        grads[f"b{layer}"] = delta.sum(axis=0)
        delta = delta @ params[f"W{layer}"]
        if layer > 1:
            delta = delta * (pre[layer - 2] > 0)

    # delta is now d(loss)/d(content * w_imp); only observed entries reach w_imp
    coo = rows.tocoo()
    contributions = coo.data * delta[coo.row, coo.col]
    grads['w_imp'] = grads['w_imp'] + np.bincount(coo.col, weights=contributions, minlength=rows.shape[1])


def loss_and_grads(batch, params, hyper, rng=None, content=None, draws=None):
    result = forward_backward(batch, params, hyper, rng=rng, content=content, draws=draws)
    return result.loss, result.grads
