import logging

import numpy as np
import pandas as pd

from .datasets import Dataset, make_triples
from .exceptions import EmptyAfterFilterError, EmptyInputError

logger = logging.getLogger(__name__)


def events_frame(events):
    return pd.DataFrame(
        {
            'user_id': [event.user_id for event in events],
            'item_id': [event.item_id for event in events],
            'rating': np.array([event.rating for event in events], dtype=np.float64),
        }
    )


def core_filter(events, min_user=20, min_item=20, max_rating=None):
    """
    Iteratively drop users with fewer than `min_user` ratings and items with
    fewer than `min_item` ratings until neither removal changes anything.
    Expects deduplicated events. Dense ids follow the sorted original ids.
    """
    if not events:
        raise EmptyInputError("no rating events to filter")

    frame = events_frame(events)
    rounds = 0
    while True:
        rounds += 1
        size = len(frame)
        frame = frame[frame.groupby('user_id')['user_id'].transform('size') >= min_user]
        frame = frame[frame.groupby('item_id')['item_id'].transform('size') >= min_item]
        if len(frame) == size:
            break

    if frame.empty:
        raise EmptyAfterFilterError(
            f"no ratings survive the {min_user}/{min_item}-core filter"
        )

    user_index = sorted(frame['user_id'].unique())
    item_index = sorted(frame['item_id'].unique())
    users = pd.Index(user_index).get_indexer(frame['user_id'])
    items = pd.Index(item_index).get_indexer(frame['item_id'])
    ratings = make_triples(users, items, frame['rating'].to_numpy())
    order = np.lexsort((ratings['item'], ratings['user']))
    ratings = ratings[order]

    observed_max = float(ratings['rating'].max())
    if max_rating is None:
        max_rating = observed_max
    elif observed_max > max_rating:
        raise ValueError(f"rating {observed_max} exceeds max_rating {max_rating}")

    logger.info(
        "Core filter (%d/%d) kept %d users, %d items, %d ratings after %d rounds",
        min_user, min_item, len(user_index), len(item_index), len(ratings), rounds,
    )
    return Dataset(
        user_index=user_index,
        item_index=item_index,
        ratings=ratings,
        max_rating=float(max_rating),
    )
