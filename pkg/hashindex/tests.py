import tempfile
from pathlib import Path

import numpy as np
import pandas as pd
from django.test import SimpleTestCase

from .bench import BENCH_COLUMNS, BenchRow, bench, bench_sweep, inner_scan, memory_estimate, write_bench_csv
from .codebook import CodeBook, load_codebook, save_codebook
from .codes import HashCode, hamming, inner_from_hamming, pack, pack_codes, unpack, unpack_codes
from .exceptions import CodeBookFormatError, CodeDomainError, CodeLengthMismatch, MissingCodeError, ResourceBudgetError
from .ranking import rank_items


def random_signs(rng, rows, m):
    return np.where(rng.random((rows, m)) < 0.5, -1.0, 1.0)


class PackTests(SimpleTestCase):

    def test_all_positive_m16(self):
        h = pack(np.ones(16))
        self.assertEqual(int(h.words[0]), 0x0000FFFF)

    def test_all_negative_is_zero(self):
        self.assertEqual(int(pack(-np.ones(32)).words[0]), 0)

    def test_bit_order(self):
        z = -np.ones(8)
        z[[1, 4, 5, 7]] = 1
        self.assertEqual(int(pack(z).words[0]), 0b10110010)

    def test_round_trip(self):
        rng = np.random.default_rng(0)
        for m in (64, 100, 512):
            z = random_signs(rng, 1, m)[0]
            h = pack(z)
            np.testing.assert_array_equal(unpack(h), z)
            self.assertEqual(pack(unpack(h)), h)

    def test_padding_bits_stay_zero(self):
        words = pack_codes(np.ones((3, 70)))
        self.assertEqual(words.shape, (3, 2))
        self.assertTrue((words[:, 1] == np.uint64(0x3F)).all())

    def test_set_padding_bits_are_rejected(self):
        self.assertEqual(HashCode([0xFFFF], 16), pack(np.ones(16)))
        with self.assertRaises(CodeDomainError):
            HashCode([0x1FFFF], 16)
        with self.assertRaises(CodeDomainError):
            HashCode([0, 1 << 6], 70)

    def test_domain(self):
        with self.assertRaises(CodeDomainError):
            pack(np.array([1.0, 0.0, -1.0]))
        with self.assertRaises(CodeLengthMismatch):
            pack(np.ones(513))


class HammingTests(SimpleTestCase):

    def test_identity_and_complement(self):
        z = random_signs(np.random.default_rng(1), 1, 64)[0]
        self.assertEqual(hamming(pack(z), pack(z)), 0)
        self.assertEqual(hamming(pack(z), pack(-z)), 64)

    def test_m8_matches_bit_enumeration(self):
        a, b = 0b10110010, 0b10011010
        expected = sum(((a >> j) & 1) != ((b >> j) & 1) for j in range(8))
        self.assertEqual(hamming(HashCode([a], 8), HashCode([b], 8)), expected)
        self.assertEqual(expected, 2)

    def test_mismatched_lengths(self):
        with self.assertRaises(CodeLengthMismatch):
            hamming(pack(np.ones(16)), pack(np.ones(32)))

    def test_metric_axioms(self):
        rng = np.random.default_rng(2)
        codes = [pack(z) for z in random_signs(rng, 30, 48)]
        for a, b, c in zip(codes, codes[1:], codes[2:]):
            self.assertEqual(hamming(a, b), hamming(b, a))
            self.assertLessEqual(hamming(a, c), hamming(a, b) + hamming(b, c))

    def test_inner_product_identity_exhaustive_m8(self):
        words = np.arange(256, dtype=np.uint64)[:, None]
        signs = unpack_codes(words, 8)
        distances = np.bitwise_count(words ^ words.T).astype(np.int64)
        np.testing.assert_array_equal(signs @ signs.T, 8 - 2 * distances)

    def test_inner_product_identity_random_m64(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            first, second = random_signs(rng, 100_000, 64), random_signs(rng, 100_000, 64)
            distances = np.bitwise_count(pack_codes(first) ^ pack_codes(second)).sum(axis=1, dtype=np.int64)
            np.testing.assert_array_equal(np.einsum('ij,ij->i', first, second), 64 - 2 * distances)

    def test_inner_from_hamming(self):
        self.assertEqual(inner_from_hamming(16, 0), 16)
        self.assertEqual(inner_from_hamming(16, 16), -16)
        self.assertEqual(inner_from_hamming(16, 4), 8)
        with self.assertRaises(ValueError):
            inner_from_hamming(16, 17)


class CodeBookTests(SimpleTestCase):

    def setUp(self):
        rng = np.random.default_rng(4)
        self.codebook = CodeBook.from_signs(np.arange(6), random_signs(rng, 6, 70), np.arange(10, 30), random_signs(rng, 20, 70))

    def test_file_round_trip(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = save_codebook(self.codebook, Path(tmp) / 'codes.bin')
            self.assertTrue(load_codebook(path).equals(self.codebook))

    def test_rejects_foreign_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / 'codes.bin'
            path.write_bytes(b'x' * 40)
            with self.assertRaises(CodeBookFormatError):
                load_codebook(path)

    def test_missing_code_names_entity(self):
        with self.assertRaisesMessage(MissingCodeError, 'item 99'):
            self.codebook.item_rows([10, 99])
        with self.assertRaisesMessage(MissingCodeError, 'user 6'):
            self.codebook.user_code(6)


class RankingTests(SimpleTestCase):

    def setUp(self):
        rng = np.random.default_rng(5)
        self.item_signs = random_signs(rng, 20, 16)
        self.codebook = CodeBook.from_signs([0], random_signs(rng, 1, 16), np.arange(100, 120), self.item_signs)

    def test_empty_and_single(self):
        user = self.codebook.user_code(0)
        self.assertEqual(rank_items(user, self.codebook, []), [])
        self.assertEqual(rank_items(user, self.codebook, [105]), [105])

    def test_identical_code_ranks_first(self):
        user = pack(self.item_signs[7])
        self.assertEqual(rank_items(user, self.codebook, np.arange(100, 120))[0], 107)

    def test_matches_inner_product_sort(self):
        user_signs = unpack(self.codebook.user_code(0))
        candidates = np.arange(119, 99, -1)
        expected = sorted(candidates.tolist(), key=lambda item: (-float(user_signs @ self.item_signs[item - 100]), item))
        ranked = rank_items(self.codebook.user_code(0), self.codebook, candidates)
        self.assertEqual(ranked, expected)
        self.assertEqual(sorted(ranked), sorted(candidates.tolist()))

    def test_ties_broken_by_item_id(self):
        signs = np.ones((3, 16))
        codebook = CodeBook.from_signs([0], np.ones((1, 16)), [30, 10, 20], signs)
        self.assertEqual(rank_items(codebook.user_code(0), codebook, [30, 10, 20]), [10, 20, 30])


class BenchTests(SimpleTestCase):

    def test_smallest_run_is_well_formed(self):
        row = bench(1, 1, 64, repetitions=2, memory_budget=1 << 20)
        self.assertTrue(np.isfinite(row.hamming_seconds))
        self.assertTrue(np.isfinite(row.inner_seconds))
        self.assertEqual(row.pair_count, 1)
        self.assertEqual(row.threads, 1)

    def test_checksum_counts_every_pair(self):
        row = bench(20, 30, 16, repetitions=1, memory_budget=1 << 20)
        self.assertGreater(row.hamming_checksum, 0)
        self.assertLessEqual(row.hamming_checksum, 20 * 30 * 16)

    def test_inner_scan_matches_matrix_product(self):
        rng = np.random.default_rng(3)
        users = rng.standard_normal((7, 64)).astype(np.float32)
        items = rng.standard_normal((50, 64)).astype(np.float32)
        expected = float((users.astype(np.float64) @ items.astype(np.float64).T).sum())
        self.assertAlmostEqual(inner_scan(users, items), expected, delta=1e-2)

    def test_budget_is_checked_before_allocation(self):
        with self.assertRaises(ResourceBudgetError):
            bench(100_000, 1_000_000, 64, memory_budget=1024)

    def test_full_scale_fits_default_budget(self):
        self.assertLess(memory_estimate(100_000, 1_000_000, 64), 4 * 1024 ** 3)
        row = BenchRow(100_000, 1_000_000, 64, 1, 10, 1.0, 45.0, 0, 0.0)
        self.assertEqual(row.pair_count, 10 ** 11)
        self.assertEqual(row.speedup, 45.0)

    def test_sweep_csv(self):
        report = bench_sweep(4, [3, 5], 32, repetitions=1, memory_budget=1 << 20)
        with tempfile.TemporaryDirectory() as tmp:
            frame = pd.read_csv(write_bench_csv(report, Path(tmp) / 'bench.csv'))
        self.assertEqual(list(frame.columns), BENCH_COLUMNS)
        self.assertEqual(frame['num_items'].tolist(), [3, 5])
