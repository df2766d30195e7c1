"""
Learnable tensors of NeuHash-CF and their initialisation.

Content-aware variant:
    W1..W{L+1}, b1..b{L+1}   item encoder (content -> L ReLU layers -> m logits)
    w_imp                    per-word importance, shared by encoder and content decoder
    E_user                   |U| x m user embedding
    E_word, b_word           n x m word embedding and bias of the content decoder

No-content variant (NeuHash-CF/no.C): E_user and E_item only.
"""
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ShapeError

CONTENT_AWARE = 'content_aware'
NO_CONTENT = 'no_content'
VARIANTS = [CONTENT_AWARE, NO_CONTENT]

EMBEDDING_STD = 0.01


@dataclass
class ModelParams:
    variant: str
    m: int
    tensors: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.tensors[name]

    def __setitem__(self, name, value):
        self.tensors[name] = value

    def __iter__(self):
        return iter(sorted(self.tensors))

    @property
    def is_content_aware(self):
        return self.variant == CONTENT_AWARE

    @property
    def depth(self):
        """Number of encoder weight matrices (hidden layers + output)."""
        return sum(1 for name in self.tensors if name.startswith('W'))

    @property
    def num_users(self):
        return self.tensors['E_user'].shape[0]

    @property
    def num_items(self):
        """Rows of the item embedding; None for the content encoder."""
        item_embedding = self.tensors.get('E_item')
        return None if item_embedding is None else item_embedding.shape[0]

    @property
    def vocab_size(self):
        return self.tensors['w_imp'].shape[0] if self.is_content_aware else 0

    @property
    def hidden_sizes(self):
        return [self.tensors[f"b{layer}"].shape[0] for layer in range(1, self.depth)]

    def zeros_like(self):
        return ModelParams(self.variant, self.m, {name: np.zeros_like(value) for name, value in self.tensors.items()})

    def copy(self):
        return ModelParams(self.variant, self.m, {name: value.copy() for name, value in self.tensors.items()})

    def shapes(self):
        return {name: tuple(self.tensors[name].shape) for name in self}

    def check(self):
        """Raise ShapeError unless every tensor agrees with m, n, |U| and the layer sizes."""
        t = self.tensors
        if t['E_user'].ndim != 2 or t['E_user'].shape[1] != self.m:
            raise ShapeError(f"E_user must be |U| x {self.m}, got {t['E_user'].shape}")
        if not self.is_content_aware:
            if 'E_item' not in t or t['E_item'].ndim != 2 or t['E_item'].shape[1] != self.m:
                raise ShapeError(f"E_item must be |I| x {self.m}")
            return self
        n = t['w_imp'].shape[0]
        fan_in = n
        for layer in range(1, self.depth + 1):
            weight, bias = t[f"W{layer}"], t[f"b{layer}"]
            if weight.ndim != 2 or weight.shape[1] != fan_in or bias.shape != (weight.shape[0],):
                raise ShapeError(f"W{layer}/b{layer} shapes {weight.shape}/{bias.shape} do not chain from {fan_in}")
            fan_in = weight.shape[0]
        if fan_in != self.m:
            raise ShapeError(f"encoder output {fan_in} != m={self.m}")
        if t['E_word'].shape != (n, self.m) or t['b_word'].shape != (n,):
            raise ShapeError(f"content decoder must be {n} x {self.m}")
        return self


def glorot_uniform(rng, fan_out, fan_in):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_out, fan_in))


def init_params(rng, variant, m, num_users, vocab_size=0, num_items=0, hidden_sizes=(1000, 1000)):
    """
    Encoder weights: Glorot uniform. Embeddings: N(0, 0.01^2). Biases: zero.
    w_imp starts at one so the encoder first sees the TF-IDF weights as they are.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant: {variant}")
    tensors = {'E_user': rng.normal(0.0, EMBEDDING_STD, size=(num_users, m))}

    if variant == NO_CONTENT:
        tensors['E_item'] = rng.normal(0.0, EMBEDDING_STD, size=(num_items, m))
        return ModelParams(variant, m, tensors).check()

    sizes = [vocab_size, *hidden_sizes, m]
    for layer, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:]), start=1):
        tensors[f"W{layer}"] = glorot_uniform(rng, fan_out, fan_in)
        tensors[f"b{layer}"] = np.zeros(fan_out)
    tensors['w_imp'] = np.ones(vocab_size)
    tensors['E_word'] = rng.normal(0.0, EMBEDDING_STD, size=(vocab_size, m))
    tensors['b_word'] = np.zeros(vocab_size)
    return ModelParams(variant, m, tensors).check()
