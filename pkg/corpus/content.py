import hashlib
import logging
import re
from collections import defaultdict
from functools import partial

import numpy as np
import scipy.sparse as sp
from django.conf import settings
from sklearn.feature_extraction.text import CountVectorizer, TfidfTransformer


logger = logging.getLogger(__name__)

_NON_ALNUM = re.compile(r'[^a-z0-9]+')


def load_stopwords(path=None):
    path = path or settings.NEUHASH['STOPWORDS_PATH']
    with open(path, encoding='utf-8') as handle:
        return frozenset(line.strip().lower() for line in handle if line.strip())


def stopwords_digest(stopwords):
    joined = '\n'.join(sorted(stopwords)).encode('utf-8')
    return hashlib.sha256(joined).hexdigest()


def tokenize(text, stopwords=frozenset()):
    """Lowercase, split on non-alphanumerics, drop tokens shorter than 2 and stopwords."""
    return [
        token for token in _NON_ALNUM.split(text.lower())
        if len(token) >= 2 and token not in stopwords
    ]


def item_documents(dataset, events):
    """One concatenated review text per dense item."""
    position = {item_id: index for index, item_id in enumerate(dataset.item_index)}
    reviews = defaultdict(list)
    for event in events:
        index = position.get(event.item_id)
        if index is not None and event.review_text:
            reviews[index].append(event.review_text)
    return [' '.join(reviews[index]) for index in range(dataset.num_items)]


def select_vocabulary(counts, vocab_size):
    """
    Columns of the `vocab_size` words with the highest document frequency.
    Columns are alphabetical, so a stable sort breaks ties alphabetically.
    """
    document_frequency = np.bincount(counts.indices, minlength=counts.shape[1])
    ranked = np.argsort(-document_frequency, kind='stable')
    return np.sort(ranked[:vocab_size])


def build_content(dataset, events, vocab_size=8000, stopwords=None):
    """
    Aggregate each item's reviews into one document, drop stopwords, keep the
    `vocab_size` words with the highest document frequency and weight them by
    tf * (ln((1 + N) / (1 + df)) + 1), rows L2-normalised.
    Items without surviving tokens keep an all-zero row; when no item has any,
    the content matrix is |I| x 0.
    """
    if stopwords is None:
        stopwords = load_stopwords()

    documents = item_documents(dataset, events)
    vectorizer = CountVectorizer(analyzer=partial(tokenize, stopwords=frozenset(stopwords)))
    try:
        counts = vectorizer.fit_transform(documents).tocsr()
    except ValueError:
        # sklearn refuses an empty vocabulary
        logger.warning("No tokens survive stopword removal; all %d items have zero content vectors", dataset.num_items)
        empty = sp.csr_matrix((dataset.num_items, 0), dtype=np.float64)
        return dataset.with_content(empty, [], np.zeros(0), empty_content_items=dataset.num_items)

    words = vectorizer.get_feature_names_out()
    columns = select_vocabulary(counts, vocab_size)
    counts = counts[:, columns]
    vocabulary = [str(word) for word in words[columns]]

    transformer = TfidfTransformer(norm='l2', use_idf=True, smooth_idf=True, sublinear_tf=False)
    content = transformer.fit_transform(counts).tocsr()
    content.sort_indices()

    empty = int((content.getnnz(axis=1) == 0).sum())
    if empty:
        logger.warning("%d items have no content words; keeping zero content vectors", empty)
    logger.info("Built TF-IDF content: %d items x %d words", content.shape[0], content.shape[1])

    return dataset.with_content(content, vocabulary, transformer.idf_, empty_content_items=empty)
