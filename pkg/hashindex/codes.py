"""
Bitpacked hash codes.

A code z in {-1, +1}^m is stored as ceil(m / 64) little-endian uint64 words,
bit j of the code in word j // 64 at position j % 64, set iff z_j = +1.
Bits above position m are always zero, so XOR over the padding contributes
nothing to a Hamming distance.
"""
import numpy as np

from .exceptions import CodeDomainError, CodeLengthMismatch

WORD_BITS = 64
MAX_BITS = 512
DEFAULT_LENGTHS = (16, 32, 64)


def words_for(m):
    if not 1 <= m <= MAX_BITS:
        raise CodeLengthMismatch(f"code length must be in [1, {MAX_BITS}], got {m}")
    return -(-m // WORD_BITS)


class HashCode:
    __slots__ = ('words', 'm')

    def __init__(self, words, m):
        words = np.ascontiguousarray(words, dtype=np.uint64).reshape(-1)
        if len(words) != words_for(m):
            raise CodeLengthMismatch(f"{len(words)} words cannot hold an m={m} code")
        spare = len(words) * WORD_BITS - m
        if spare and words[-1] >> np.uint64(WORD_BITS - spare):
            raise CodeDomainError(f"bits above position {m} must be zero")
        self.words = words
        self.m = m

    def __eq__(self, other):
        if not isinstance(other, HashCode):
            return NotImplemented
        return self.m == other.m and np.array_equal(self.words, other.words)

    def __hash__(self):
        return hash((self.m, self.words.tobytes()))

    def __repr__(self):
        return f"HashCode(m={self.m}, words=[{', '.join(hex(int(w)) for w in self.words)}])"


def _check_domain(z):
    z = np.asarray(z)
    if z.size and not np.all((z == 1) | (z == -1)):
        raise CodeDomainError("code entries must be -1 or +1")
    return z


def pack_codes(z):
    """(rows, m) matrix of +-1 codes -> (rows, words) uint64 matrix."""
    z = _check_domain(np.atleast_2d(z))
    rows, m = z.shape
    bits = (z > 0).astype(np.uint64)
    packed = np.zeros((rows, words_for(m)), dtype=np.uint64)
    for word in range(packed.shape[1]):
        chunk = bits[:, word * WORD_BITS:(word + 1) * WORD_BITS]
        shifts = np.arange(chunk.shape[1], dtype=np.uint64)
        packed[:, word] = np.bitwise_or.reduce(chunk << shifts, axis=1)
    return packed


def unpack_codes(words, m):
    """(rows, words) uint64 matrix -> (rows, m) matrix of +-1 as float64."""
    words = np.atleast_2d(np.asarray(words, dtype=np.uint64))
    if words.shape[1] != words_for(m):
        raise CodeLengthMismatch(f"{words.shape[1]} words cannot hold an m={m} code")
    positions = np.arange(m)
    bits = (words[:, positions // WORD_BITS] >> (positions % WORD_BITS).astype(np.uint64)) & np.uint64(1)
    return np.where(bits == 1, 1.0, -1.0)


def pack(z):
    z = _check_domain(z)
    if z.ndim != 1:
        raise CodeDomainError(f"pack takes one code vector, got shape {z.shape}")
    return HashCode(pack_codes(z)[0], len(z))


def unpack(h):
    return unpack_codes(h.words[None, :], h.m)[0]


def hamming(a, b):
    if a.m != b.m:
        raise CodeLengthMismatch(f"cannot compare m={a.m} with m={b.m}")
    return int(np.bitwise_count(a.words ^ b.words).sum())


def hamming_to_rows(code_words, rows):
    """Distances from one packed code to every row of a packed matrix."""
    rows = np.atleast_2d(rows)
    if rows.shape[1] != len(code_words):
        raise CodeLengthMismatch(f"row width {rows.shape[1]} != {len(code_words)} words")
    return np.bitwise_count(rows ^ code_words).sum(axis=1, dtype=np.int64)


def inner_from_hamming(m, h):
    if not 0 <= h <= m:
        raise ValueError(f"hamming distance {h} outside [0, {m}]")
    return m - 2 * h
