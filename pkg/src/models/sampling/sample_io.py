"""
Sample-set files: a flat binary block plus a JSON sidecar.

Block layout: count (uint32) | dim (uint32) | count*dim float32, all little-endian.
The sidecar sits next to the block as `<name>.json`.
"""

import json
import struct
from pathlib import Path
from typing import Any, Dict, Tuple, Union

import numpy as np
from aws_lambda_powertools import Logger

from src.shared.utils import atomic_write_bytes, atomic_write_json, git_blob_hash

logger = Logger(service='sample-io')

HEADER = struct.Struct('<II')


def sidecar_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.name + '.json')


def encode_samples(samples: np.ndarray) -> bytes:
    samples = np.asarray(samples)
    if samples.ndim != 2:
        raise ValueError(f'Sample block must be 2-D, got shape {samples.shape}')
    count, dim = samples.shape
    return HEADER.pack(count, dim) + np.ascontiguousarray(samples, dtype='<f4').tobytes()


def decode_samples(data: bytes) -> np.ndarray:
    if len(data) < HEADER.size:
        raise ValueError('Sample block shorter than its header')
    count, dim = HEADER.unpack_from(data)
    expected = HEADER.size + 4 * count * dim
    if len(data) != expected:
        raise ValueError(f'Sample block has {len(data)} bytes, expected {expected}')
    values = np.frombuffer(data, dtype='<f4', offset=HEADER.size, count=count * dim)
    return values.reshape(count, dim).astype(np.float32)


def write_samples(
    path: Union[str, Path], samples: np.ndarray, sidecar: Dict[str, Any]
) -> Tuple[Path, str]:
    """
    Write the block and its sidecar atomically.

    The sidecar records the block hash next to the caller's metadata (plan,
    seeds, checkpoint hashes).

    Returns:
        (block path, block hash)
    """
    data = encode_samples(samples)
    digest = git_blob_hash(data)
    path = atomic_write_bytes(path, data)
    atomic_write_json(sidecar_path(path), {**sidecar, 'samples_hash': digest})
    logger.info(f'Wrote {len(samples)} samples to {path}')
    return path, digest


def read_samples(path: Union[str, Path]) -> Tuple[np.ndarray, Dict[str, Any]]:
    """
    Read a block and its sidecar (empty dict when the sidecar is absent).

    Raises:
        ValueError: If the block does not match the hash stored in the sidecar
    """
    path = Path(path)
    data = path.read_bytes()
    meta: Dict[str, Any] = {}
    if sidecar_path(path).exists():
        meta = json.loads(sidecar_path(path).read_text())
        stored = meta.get('samples_hash')
        if stored is not None and stored != git_blob_hash(data):
            raise ValueError(f'Sample block {path} does not match its sidecar hash')
    return decode_samples(data), meta
