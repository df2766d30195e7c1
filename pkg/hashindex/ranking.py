import numpy as np

from .codes import hamming_to_rows
from .exceptions import CodeLengthMismatch


def rank_items(user, items, candidate_ids):
    """
    Candidate item ids ordered by ascending Hamming distance to the user
    code, ties broken by ascending item id. `items` is the CodeBook holding
    the candidates' codes.
    """
    candidates = np.asarray(candidate_ids, dtype=np.int64).reshape(-1)
    if len(candidates) == 0:
        return []
    if user.m != items.m:
        raise CodeLengthMismatch(f"user code m={user.m}, item codes m={items.m}")
    distances = hamming_to_rows(user.words, items.item_codes[items.item_rows(candidates)])
    order = np.lexsort((candidates, distances))
    return candidates[order].tolist()
