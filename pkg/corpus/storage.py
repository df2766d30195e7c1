"""
On-disk layout of Dataset and Split directories.

Dataset directory:
    ratings.bin    dense-id triples (<i4 user, <i4 item, <f8 rating)
    content.bin    CSR header + row offsets (<i8) + column indices (<i4) + weights (<f8)
    vocab.txt      one `word<TAB>idf` line per content column
    users.txt      original user id per dense id
    items.txt      original item id per dense id
    manifest.json  counts, seed, parameters, stopword-list hash

Split directory:
    train.bin, validation.bin, test.bin   triples as above
    manifest.json
"""
import json
import struct
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .datasets import RATING_DTYPE, Dataset, Split
from .exceptions import ArtifactFormatError, MissingArtifactError

CONTENT_MAGIC = b'NHCFCSR\x00'
CONTENT_VERSION = 1
# magic, version, rows, cols, nnz
CONTENT_HEADER = struct.Struct('<8sIQQQ')

SPLIT_PARTS = ('train', 'validation', 'test')


def write_manifest(directory, manifest):
    path = Path(directory) / 'manifest.json'
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + '\n', encoding='utf-8')
    return path


def read_manifest(directory):
    return json.loads(_require(Path(directory) / 'manifest.json').read_text(encoding='utf-8'))


def _json_default(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, Path):
        return str(value)
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def _require(path):
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(path)
    return path


def write_triples(path, triples):
    Path(path).write_bytes(np.ascontiguousarray(triples, dtype=RATING_DTYPE).tobytes())


def read_triples(path):
    raw = _require(path).read_bytes()
    if len(raw) % RATING_DTYPE.itemsize:
        raise ArtifactFormatError(f"{path}: size is not a multiple of a rating triple")
    return np.frombuffer(raw, dtype=RATING_DTYPE).copy()


def write_content(path, content):
    content = content.tocsr()
    content.sort_indices()
    with open(path, 'wb') as handle:
        handle.write(CONTENT_HEADER.pack(CONTENT_MAGIC, CONTENT_VERSION, *content.shape, content.nnz))
        handle.write(content.indptr.astype('<i8').tobytes())
        handle.write(content.indices.astype('<i4').tobytes())
        handle.write(content.data.astype('<f8').tobytes())


def read_content(path):
    raw = _require(path).read_bytes()
    if len(raw) < CONTENT_HEADER.size:
        raise ArtifactFormatError(f"{path}: truncated header")
    magic, version, rows, cols, nnz = CONTENT_HEADER.unpack_from(raw)
    if magic != CONTENT_MAGIC or version != CONTENT_VERSION:
        raise ArtifactFormatError(f"{path}: not a content file (version {version})")
    offset = CONTENT_HEADER.size
    indptr = np.frombuffer(raw, dtype='<i8', count=rows + 1, offset=offset)
    offset += indptr.nbytes
    indices = np.frombuffer(raw, dtype='<i4', count=nnz, offset=offset)
    offset += indices.nbytes
    data = np.frombuffer(raw, dtype='<f8', count=nnz, offset=offset)
    return sp.csr_matrix((data.copy(), indices.copy(), indptr.copy()), shape=(rows, cols))


def _write_lines(path, lines):
    Path(path).write_text(''.join(f"{line}\n" for line in lines), encoding='utf-8')


def _read_lines(path):
    return _require(path).read_text(encoding='utf-8').splitlines()


def save_dataset(dataset, directory, manifest=None):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_triples(directory / 'ratings.bin', dataset.ratings)
    _write_lines(directory / 'users.txt', dataset.user_index)
    _write_lines(directory / 'items.txt', dataset.item_index)
    if dataset.has_content:
        write_content(directory / 'content.bin', dataset.content)
        _write_lines(
            directory / 'vocab.txt',
            (f"{word}\t{float(idf)!r}" for word, idf in zip(dataset.vocabulary, dataset.idf)),
        )
    write_manifest(directory, {
        'num_users': dataset.num_users,
        'num_items': dataset.num_items,
        'num_ratings': len(dataset.ratings),
        'vocab_size': dataset.vocab_size,
        'max_rating': dataset.max_rating,
        'empty_content_items': dataset.empty_content_items,
        **(manifest or {}),
    })
    return directory


def load_dataset(directory):
    directory = Path(directory)
    manifest = read_manifest(directory)
    dataset = Dataset(
        user_index=_read_lines(directory / 'users.txt'),
        item_index=_read_lines(directory / 'items.txt'),
        ratings=read_triples(directory / 'ratings.bin'),
        max_rating=float(manifest['max_rating']),
    )
    if (directory / 'content.bin').exists():
        vocabulary, idf = [], []
        for line in _read_lines(directory / 'vocab.txt'):
            word, weight = line.split('\t')
            vocabulary.append(word)
            idf.append(float(weight))
        dataset = dataset.with_content(
            read_content(directory / 'content.bin'), vocabulary, idf,
            empty_content_items=manifest.get('empty_content_items', 0),
        )
    return dataset


def save_split(split, directory, manifest=None):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name in SPLIT_PARTS:
        write_triples(directory / f"{name}.bin", split.part(name))
    write_manifest(directory, {
        'kind': split.kind,
        'seed': split.seed,
        'train_fraction': split.train_fraction,
        'parameters': split.parameters,
        'counts': {name: len(split.part(name)) for name in SPLIT_PARTS},
        **(manifest or {}),
    })
    return directory


def load_split(directory):
    directory = Path(directory)
    manifest = read_manifest(directory)
    return Split(
        kind=manifest['kind'],
        seed=manifest['seed'],
        train_fraction=manifest.get('train_fraction'),
        parameters=manifest.get('parameters', {}),
        **{name: read_triples(directory / f"{name}.bin") for name in SPLIT_PARTS},
    )
