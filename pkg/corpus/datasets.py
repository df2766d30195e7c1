"""
Domain types shared by the whole pipeline.

- RatingEvent: one raw (user, item, rating) observation with optional review text
- Dataset: dense-indexed ratings after 20-core filtering, plus TF-IDF item content
- Split: train/validation/test rating triples, in-matrix or out-of-matrix
"""
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.sparse as sp

# dense-id triples, little-endian on disk and in memory
RATING_DTYPE = np.dtype([('user', '<i4'), ('item', '<i4'), ('rating', '<f8')])

IN_MATRIX = 'in_matrix'
OUT_OF_MATRIX = 'out_of_matrix'
SPLIT_KINDS = [IN_MATRIX, OUT_OF_MATRIX]


@dataclass(frozen=True, slots=True)
class RatingEvent:
    user_id: str
    item_id: str
    rating: float
    timestamp: int
    review_text: Optional[str] = None
    line: Optional[int] = field(default=None, compare=False)


def empty_triples():
    return np.zeros(0, dtype=RATING_DTYPE)


def make_triples(users, items, ratings):
    triples = np.empty(len(users), dtype=RATING_DTYPE)
    triples['user'] = users
    triples['item'] = items
    triples['rating'] = ratings
    return triples


@dataclass
class Dataset:
    """
    Ratings over dense ids. `user_index[u]` is the original id of dense user u,
    likewise for items. `content` is an |I| x n CSR matrix (None before
    build_content), `vocabulary[w]` / `idf[w]` describe its columns.
    """
    user_index: list
    item_index: list
    ratings: np.ndarray
    max_rating: float
    content: Optional[sp.csr_matrix] = None
    vocabulary: list = field(default_factory=list)
    idf: Optional[np.ndarray] = None
    empty_content_items: int = 0

    @property
    def num_users(self):
        return len(self.user_index)

    @property
    def num_items(self):
        return len(self.item_index)

    @property
    def vocab_size(self):
        return len(self.vocabulary)

    @property
    def has_content(self):
        return self.content is not None

    def item_counts(self):
        return np.bincount(self.ratings['item'], minlength=self.num_items)

    def user_counts(self):
        return np.bincount(self.ratings['user'], minlength=self.num_users)

    def with_content(self, content, vocabulary, idf, empty_content_items=0):
        return replace(
            self,
            content=content.tocsr(),
            vocabulary=list(vocabulary),
            idf=np.asarray(idf, dtype=np.float64),
            empty_content_items=int(empty_content_items),
        )


@dataclass
class Split:
    kind: str
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    seed: int
    train_fraction: Optional[float] = None
    parameters: dict = field(default_factory=dict)

    def part(self, name):
        if name not in ('train', 'validation', 'test'):
            raise ValueError(f"unknown split part: {name}")
        return getattr(self, name)

    def items_of(self, name):
        return np.unique(self.part(name)['item'])

    def users_of(self, name):
        return np.unique(self.part(name)['user'])

    @property
    def is_out_of_matrix(self):
        return self.kind == OUT_OF_MATRIX
