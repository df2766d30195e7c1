"""
Synthetic ratings with review text, for runs without a public corpus.

Users and items carry mixtures over latent topics. An item's reviews draw
words from its topics' word blocks, and a rating is a noisy function of
user-item topic affinity, so content predicts ratings.
"""
import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .datasets import RatingEvent
from .ingest import COLUMNS

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SyntheticSpec:
    users: int = 2000
    items: int = 1000
    vocab: int = 500
    topics: int = 8
    ratings_per_user: int = 40
    words_per_review: int = 12
    concentration: float = 0.3
    rating_noise: float = 0.5
    max_rating: int = 5
    seed: int = 0

    @classmethod
    def parse(cls, text, seed=0):
        """`users=U items=I ...` (space or comma separated) -> SyntheticSpec."""
        values = {'seed': seed}
        for token in text.replace(',', ' ').split():
            key, _, value = token.partition('=')
            if key not in cls.__dataclass_fields__:
                raise ValueError(f"unknown synthetic option: {key}")
            field_type = type(getattr(cls, key))
            values[key] = field_type(value)
        return cls(**values)


def topic_words(spec):
    """Vocabulary split into one contiguous block of words per topic."""
    return np.array_split(np.arange(spec.vocab), spec.topics)


def generate_events(spec):
    rng = np.random.default_rng(spec.seed)
    user_topics = rng.dirichlet([spec.concentration] * spec.topics, size=spec.users)
    item_topics = rng.dirichlet([spec.concentration] * spec.topics, size=spec.items)

    affinity = user_topics @ item_topics.T
    scaled = (affinity - affinity.mean()) / (affinity.std() + 1e-12)

    blocks = topic_words(spec)
    words = np.array([f"w{index:04d}" for index in range(spec.vocab)])
    per_user = min(spec.ratings_per_user, spec.items)

    events = []
    timestamp = 0
    for user in range(spec.users):
        chosen = np.sort(rng.choice(spec.items, size=per_user, replace=False))
        noise = rng.normal(0.0, spec.rating_noise, size=per_user)
        ratings = np.clip(np.rint(3.0 + 1.2 * scaled[user, chosen] + noise), 1, spec.max_rating)
        for item, rating in zip(chosen, ratings):
            topics = rng.choice(spec.topics, size=spec.words_per_review, p=item_topics[item])
            review = ' '.join(words[rng.choice(blocks[topic])] for topic in topics)
            timestamp += 1
            events.append(RatingEvent(
                user_id=f"u{user:05d}",
                item_id=f"i{item:05d}",
                rating=float(rating),
                timestamp=timestamp,
                review_text=review,
            ))
    logger.info("Generated %d synthetic ratings (%d users, %d items)", len(events), spec.users, spec.items)
    return events


def write_events(events, path, format='tsv'):
    frame = pd.DataFrame(
        [(e.user_id, e.item_id, e.rating, e.timestamp, e.review_text or '') for e in events],
        columns=COLUMNS,
    )
    frame.to_csv(path, sep='\t' if format == 'tsv' else ',', index=False)
    return path
