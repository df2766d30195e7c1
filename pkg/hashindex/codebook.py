"""
CodeBook: packed user and item codes of one model, plus the on-disk format.

    magic b'NHCFCODE' | version <u4 | m <u4 | users <u8 | items <u8
    user codes (users x words, <u8), item codes (items x words, <u8)
    user ids (<i8), item ids (<i8)
"""
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codes import HashCode, pack_codes, unpack_codes, words_for
from .exceptions import CodeBookFormatError, CodeLengthMismatch, MissingCodeError

logger = logging.getLogger(__name__)

MAGIC = b'NHCFCODE'
VERSION = 1
HEADER = struct.Struct('<8sIIQQ')


def _lookup(ids):
    return {int(entity): row for row, entity in enumerate(ids)}


@dataclass
class CodeBook:
    m: int
    user_ids: np.ndarray
    user_codes: np.ndarray
    item_ids: np.ndarray
    item_codes: np.ndarray

    def __post_init__(self):
        self.user_ids = np.asarray(self.user_ids, dtype=np.int64)
        self.item_ids = np.asarray(self.item_ids, dtype=np.int64)
        width = words_for(self.m)
        self.user_codes = np.asarray(self.user_codes, dtype=np.uint64).reshape(len(self.user_ids), width)
        self.item_codes = np.asarray(self.item_codes, dtype=np.uint64).reshape(len(self.item_ids), width)
        self._user_rows = _lookup(self.user_ids)
        self._item_rows = _lookup(self.item_ids)

    @classmethod
    def from_signs(cls, user_ids, user_z, item_ids, item_z):
        """Build from +-1 code matrices (rows aligned with the id arrays)."""
        user_z = np.atleast_2d(user_z)
        item_z = np.atleast_2d(item_z)
        if user_z.shape[1] != item_z.shape[1]:
            raise CodeLengthMismatch(f"user codes have m={user_z.shape[1]}, item codes m={item_z.shape[1]}")
        return cls(user_z.shape[1], user_ids, pack_codes(user_z), item_ids, pack_codes(item_z))

    @property
    def words(self):
        return words_for(self.m)

    @property
    def num_users(self):
        return len(self.user_ids)

    @property
    def num_items(self):
        return len(self.item_ids)

    def user_rows(self, users):
        return self._rows(self._user_rows, users, 'user')

    def item_rows(self, items):
        return self._rows(self._item_rows, items, 'item')

    def _rows(self, lookup, ids, label):
        rows = np.empty(len(ids), dtype=np.int64)
        for position, entity in enumerate(ids):
            row = lookup.get(int(entity))
            if row is None:
                raise MissingCodeError(f"no code for {label} {int(entity)}")
            rows[position] = row
        return rows

    def user_code(self, user):
        return HashCode(self.user_codes[self.user_rows([user])[0]], self.m)

    def item_code(self, item):
        return HashCode(self.item_codes[self.item_rows([item])[0]], self.m)

    def user_signs(self):
        return unpack_codes(self.user_codes, self.m)

    def item_signs(self):
        return unpack_codes(self.item_codes, self.m)

    def equals(self, other):
        return (
            self.m == other.m
            and np.array_equal(self.user_ids, other.user_ids)
            and np.array_equal(self.item_ids, other.item_ids)
            and np.array_equal(self.user_codes, other.user_codes)
            and np.array_equal(self.item_codes, other.item_codes)
        )


def save_codebook(codebook, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'wb') as handle:
        handle.write(HEADER.pack(MAGIC, VERSION, codebook.m, codebook.num_users, codebook.num_items))
        handle.write(codebook.user_codes.astype('<u8').tobytes())
        handle.write(codebook.item_codes.astype('<u8').tobytes())
        handle.write(codebook.user_ids.astype('<i8').tobytes())
        handle.write(codebook.item_ids.astype('<i8').tobytes())
    logger.info("Wrote %d user and %d item codes (m=%d) to %s", codebook.num_users, codebook.num_items, codebook.m, path)
    return path


def load_codebook(path):
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise CodeBookFormatError(f"{path}: truncated header")
    magic, version, m, users, items = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise CodeBookFormatError(f"{path}: not a CodeBook file")
    if version != VERSION:
        raise CodeBookFormatError(f"{path}: unsupported CodeBook version {version}")

    width = words_for(m)
    expected = HEADER.size + 8 * (users + items) * width + 8 * (users + items)
    if len(raw) != expected:
        raise CodeBookFormatError(f"{path}: expected {expected} bytes, found {len(raw)}")

    offset = HEADER.size
    user_codes = np.frombuffer(raw, dtype='<u8', count=users * width, offset=offset)
    offset += 8 * users * width
    item_codes = np.frombuffer(raw, dtype='<u8', count=items * width, offset=offset)
    offset += 8 * items * width
    user_ids = np.frombuffer(raw, dtype='<i8', count=users, offset=offset)
    offset += 8 * users
    item_ids = np.frombuffer(raw, dtype='<i8', count=items, offset=offset)
    return CodeBook(m, user_ids, user_codes, item_ids, item_codes)
