import logging
import re

import pandas as pd

from .datasets import RatingEvent
from .exceptions import EmptyInputError, ParseError

logger = logging.getLogger(__name__)

COLUMNS = ['user_id', 'item_id', 'rating', 'timestamp', 'review_text']

SEPARATORS = {
    'tsv': '\t',
    'csv': ',',
}

_PANDAS_LINE = re.compile(r'line (\d+)')


def load_ratings(path, format='tsv'):
    """
    Read rating rows (user, item, rating, timestamp, optional review text).
    A header row naming the columns is optional. Line numbers in errors are
    1-based file lines.
    """
    if format not in SEPARATORS:
        raise ValueError(f"unsupported ratings format: {format}")

    try:
        frame = pd.read_csv(
            path,
            sep=SEPARATORS[format],
            header=None,
            names=COLUMNS,
            dtype=str,
            keep_default_na=False,
            quotechar='"',
            skip_blank_lines=True,
        )
    except pd.errors.EmptyDataError as exc:
        raise EmptyInputError(f"{path} is empty") from exc
    except pd.errors.ParserError as exc:
        found = _PANDAS_LINE.search(str(exc))
        raise ParseError(f"malformed row ({exc})", line=int(found.group(1)) if found else None) from exc

    # short rows leave trailing columns missing
    frame = frame.fillna('')

    # header row
    offset = 1
    if len(frame) and frame.iloc[0]['user_id'].strip().lower() == 'user_id':
        frame = frame.iloc[1:]
        offset = 2
    if frame.empty:
        raise EmptyInputError(f"{path} contains no rating rows")

    frame = frame.reset_index(drop=True)
    lines = frame.index.to_numpy() + offset

    ratings = pd.to_numeric(frame['rating'].str.strip(), errors='coerce')
    bad = ratings.isna() | (ratings <= 0)
    if bad.any():
        row = int(bad.to_numpy().argmax())
        raise ParseError(f"invalid rating {frame['rating'].iloc[row]!r}", line=int(lines[row]))

    timestamps = pd.to_numeric(frame['timestamp'].str.strip(), errors='coerce')
    bad = timestamps.isna() | (timestamps != timestamps.round())
    if bad.any():
        row = int(bad.to_numpy().argmax())
        raise ParseError(f"invalid timestamp {frame['timestamp'].iloc[row]!r}", line=int(lines[row]))

    for column in ('user_id', 'item_id'):
        blank = frame[column].str.strip() == ''
        if blank.any():
            row = int(blank.to_numpy().argmax())
            raise ParseError(f"empty {column}", line=int(lines[row]))

    events = [
        RatingEvent(
            user_id=user.strip(),
            item_id=item.strip(),
            rating=float(rating),
            timestamp=int(timestamp),
            review_text=review or None,
            line=int(line),
        )
        for user, item, rating, timestamp, review, line in zip(
            frame['user_id'], frame['item_id'], ratings, timestamps, frame['review_text'], lines
        )
    ]
    logger.info("Loaded %d rating rows from %s", len(events), path)
    return events


def deduplicate_events(events):
    """
    Keep only the last rating per (user, item): latest timestamp wins, a later
    row wins a timestamp tie. Output keeps first-appearance order of the pairs.
    """
    latest = {}
    order = []
    for event in events:
        key = (event.user_id, event.item_id)
        current = latest.get(key)
        if current is None:
            order.append(key)
            latest[key] = event
        elif event.timestamp >= current.timestamp:
            latest[key] = event

    dropped = len(events) - len(order)
    if dropped:
        logger.info("Dropped %d repeated ratings (kept the latest per user/item)", dropped)
    return [latest[key] for key in order]
