"""
Checkpoint container: every tensor with its shape, the Hyper record and seeds.

    magic b'NHCFCKPT' | version <u4 | header length <u4 | JSON header (utf-8)
    tensors in header order, each as little-endian float64, C order

The JSON header carries variant, m, tensor names/shapes, hyper, seeds and any
extra metadata. Keys are sorted so equal checkpoints are byte-identical.
"""
import json
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import CheckpointFormatError
from .network import Hyper
from .params import ModelParams

MAGIC = b'NHCFCKPT'
VERSION = 1
PREAMBLE = struct.Struct('<8sII')


@dataclass
class Checkpoint:
    params: ModelParams
    hyper: Hyper
    seeds: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


def save_checkpoint(path, checkpoint):
    params = checkpoint.params
    names = list(params)
    header = {
        'variant': params.variant,
        'm': params.m,
        'tensors': [[name, list(params[name].shape)] for name in names],
        'hyper': asdict(checkpoint.hyper),
        'seeds': checkpoint.seeds,
        'extra': checkpoint.extra,
    }
    encoded = json.dumps(header, sort_keys=True).encode('utf-8')
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'wb') as handle:
        handle.write(PREAMBLE.pack(MAGIC, VERSION, len(encoded)))
        handle.write(encoded)
        for name in names:
            handle.write(np.ascontiguousarray(params[name], dtype='<f8').tobytes())
    return path


def load_checkpoint(path):
    raw = Path(path).read_bytes()
    if len(raw) < PREAMBLE.size:
        raise CheckpointFormatError(f"{path}: truncated")
    magic, version, header_length = PREAMBLE.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointFormatError(f"{path}: not a NeuHash-CF checkpoint")
    if version != VERSION:
        raise CheckpointFormatError(f"{path}: unsupported checkpoint version {version}")

    offset = PREAMBLE.size
    header = json.loads(raw[offset:offset + header_length].decode('utf-8'))
    offset += header_length

    tensors = {}
    for name, shape in header['tensors']:
        count = int(np.prod(shape)) if shape else 1
        if offset + 8 * count > len(raw):
            raise CheckpointFormatError(f"{path}: tensor {name} is truncated")
        tensors[name] = np.frombuffer(raw, dtype='<f8', count=count, offset=offset).reshape(shape).astype(np.float64)
        offset += 8 * count

    params = ModelParams(header['variant'], header['m'], tensors).check()
    return Checkpoint(
        params=params,
        hyper=Hyper(**header['hyper']),
        seeds=header.get('seeds', {}),
        extra=header.get('extra', {}),
    )
