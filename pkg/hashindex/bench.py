"""
Hamming vs. float inner-product throughput.

Both scans score every user against every item and fold the scores into a
checksum so the work cannot be optimised away. Code and vector generation is
excluded from the timings; the kernels are compiled on a tiny input first.
The float kernel is built with fastmath so its dot products vectorise.
"""
import logging
import time
from dataclasses import asdict, dataclass, field

import numba
import numpy as np
import pandas as pd
from django.conf import settings
from numba import njit, prange

from .codes import words_for
from .exceptions import ResourceBudgetError

logger = logging.getLogger(__name__)

# speedup reported for 64-bit codes on 10^8-10^11 pair scans
REFERENCE_SPEEDUP = (40.0, 50.0)
BENCH_COLUMNS = ['num_items', 'hamming_seconds', 'inner_seconds', 'speedup']


@njit(inline='always', cache=True)
def _popcount64(x):
    x = x - ((x >> np.uint64(1)) & np.uint64(0x5555555555555555))
    x = (x & np.uint64(0x3333333333333333)) + ((x >> np.uint64(2)) & np.uint64(0x3333333333333333))
    x = (x + (x >> np.uint64(4))) & np.uint64(0x0F0F0F0F0F0F0F0F)
    x = x * np.uint64(0x0101010101010101)
    return np.int64(x >> np.uint64(56))


@njit(parallel=True, nogil=True, cache=True)
def hamming_scan(user_words, item_words):
    n_users, n_words = user_words.shape
    n_items = item_words.shape[0]
    partial = np.zeros(n_users, dtype=np.int64)
    for u in prange(n_users):
        total = np.int64(0)
        for i in range(n_items):
            distance = np.int64(0)
            for w in range(n_words):
                distance += _popcount64(user_words[u, w] ^ item_words[i, w])
            total += distance
        partial[u] = total
    return partial.sum()


@njit(parallel=True, nogil=True, fastmath=True, cache=True)
def inner_scan(user_vectors, item_vectors):
    n_users, dims = user_vectors.shape
    n_items = item_vectors.shape[0]
    partial = np.zeros(n_users, dtype=np.float64)
    for u in prange(n_users):
        total = 0.0
        for i in range(n_items):
            score = np.float32(0.0)
            for d in range(dims):
                score += user_vectors[u, d] * item_vectors[i, d]
            total += score
        partial[u] = total
    return partial.sum()


@dataclass
class BenchRow:
    num_users: int
    num_items: int
    m: int
    threads: int
    repetitions: int
    hamming_seconds: float
    inner_seconds: float
    hamming_checksum: int
    inner_checksum: float

    @property
    def speedup(self):
        return self.inner_seconds / self.hamming_seconds if self.hamming_seconds > 0 else float('inf')

    @property
    def pair_count(self):
        return self.num_users * self.num_items


@dataclass
class BenchReport:
    rows: list = field(default_factory=list)

    def frame(self, threads=None):
        rows = [row for row in self.rows if threads is None or row.threads == threads]
        return pd.DataFrame(
            [[row.num_items, row.hamming_seconds, row.inner_seconds, row.speedup] for row in rows],
            columns=BENCH_COLUMNS,
        )

    def manifest(self):
        return {
            'rows': [dict(asdict(row), speedup=row.speedup, pair_count=row.pair_count) for row in self.rows],
            'reference_speedup': list(REFERENCE_SPEEDUP),
        }


def memory_estimate(num_users, num_items, m):
    """Bytes for packed codes, float32 vectors and per-user partial sums."""
    per_entity = 8 * words_for(m) + 4 * m
    return (num_users + num_items) * per_entity + 16 * num_users


def set_threads(threads):
    threads = max(1, min(int(threads), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(threads)
    return threads


def _warm_up(m):
    words = np.zeros((1, words_for(m)), dtype=np.uint64)
    vectors = np.zeros((1, m), dtype=np.float32)
    hamming_scan(words, words)
    inner_scan(vectors, vectors)


def _time(kernel, first, second, repetitions):
    checksum = None
    elapsed = []
    for _ in range(repetitions):
        start = time.perf_counter()
        checksum = kernel(first, second)
        elapsed.append(time.perf_counter() - start)
    return float(np.mean(elapsed)), checksum


def bench(num_users, num_items, m, repetitions=10, threads=1, seed=0, memory_budget=None):
    if num_users < 1 or num_items < 1:
        raise ValueError("num_users and num_items must be >= 1")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    if memory_budget is None:
        memory_budget = settings.NEUHASH['BENCH_MEMORY_BUDGET']
    required = memory_estimate(num_users, num_items, m)
    if required > memory_budget:
        raise ResourceBudgetError(required, memory_budget)

    threads = set_threads(threads)
    rng = np.random.default_rng(seed)
    width = words_for(m)
    user_words = rng.integers(0, np.iinfo(np.uint64).max, size=(num_users, width), dtype=np.uint64, endpoint=True)
    item_words = rng.integers(0, np.iinfo(np.uint64).max, size=(num_items, width), dtype=np.uint64, endpoint=True)
    if m % 64:
        mask = np.uint64((1 << (m % 64)) - 1)
        user_words[:, -1] &= mask
        item_words[:, -1] &= mask
    user_vectors = rng.standard_normal((num_users, m)).astype(np.float32)
    item_vectors = rng.standard_normal((num_items, m)).astype(np.float32)

    _warm_up(m)
    hamming_seconds, hamming_checksum = _time(hamming_scan, user_words, item_words, repetitions)
    inner_seconds, inner_checksum = _time(inner_scan, user_vectors, item_vectors, repetitions)

    row = BenchRow(
        num_users=num_users,
        num_items=num_items,
        m=m,
        threads=threads,
        repetitions=repetitions,
        hamming_seconds=hamming_seconds,
        inner_seconds=inner_seconds,
        hamming_checksum=int(hamming_checksum),
        inner_checksum=float(inner_checksum),
    )
    logger.info(
        "%d x %d pairs, m=%d, %d thread(s): hamming %.4fs, inner %.4fs, speedup %.1fx",
        num_users, num_items, m, threads, hamming_seconds, inner_seconds, row.speedup,
    )
    return row


def bench_sweep(num_users, item_counts, m, repetitions=10, threads=1, seed=0, memory_budget=None):
    """One row per item count, single-threaded; a second set of rows when threads > 1."""
    report = BenchReport()
    thread_settings = [1] if threads <= 1 else [1, threads]
    for thread_count in thread_settings:
        for num_items in item_counts:
            report.rows.append(bench(num_users, num_items, m, repetitions, thread_count, seed, memory_budget))
    set_threads(threads)
    return report


def write_bench_csv(report, path, threads=1):
    report.frame(threads).to_csv(path, index=False, float_format='%.9g')
    return path
