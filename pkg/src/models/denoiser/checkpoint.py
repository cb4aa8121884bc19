"""
Binary checkpoint format for Denoiser parameters.

Layout (all integers little-endian uint32):
    magic b'DMCK' | format version | header length | header JSON (arch descriptor)
    | block count | blocks...
Each block: name length | name (UTF-8) | ndim | extents... | float32 data (little-endian).
"""

import json
import struct
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
from aws_lambda_powertools import Logger

from src.models.denoiser.network import Denoiser, DenoiserArch
from src.shared.utils import atomic_write_bytes

logger = Logger(service='checkpoint')

MAGIC = b'DMCK'
FORMAT_VERSION = 1


def encode_checkpoint(model: Denoiser) -> bytes:
    header = json.dumps(
        {'format_version': FORMAT_VERSION, 'arch': model.arch.model_dump(mode='json')},
        sort_keys=True,
    ).encode('utf-8')
    chunks = [MAGIC, struct.pack('<II', FORMAT_VERSION, len(header)), header]
    chunks.append(struct.pack('<I', len(model.params)))
    for name in sorted(model.params):
        encoded_name = name.encode('utf-8')
        values = np.ascontiguousarray(model.params[name], dtype='<f4')
        chunks.append(struct.pack('<I', len(encoded_name)))
        chunks.append(encoded_name)
        chunks.append(struct.pack('<I', values.ndim))
        chunks.append(struct.pack(f'<{values.ndim}I', *values.shape))
        chunks.append(values.tobytes())
    return b''.join(chunks)


def decode_checkpoint(
    data: bytes, expected_arch: Optional[DenoiserArch] = None
) -> Denoiser:
    """
    Rebuild a Denoiser from checkpoint bytes.

    Raises:
        ValueError: On a bad magic/version, truncated data, or an architecture
            that differs from `expected_arch`
    """
    if data[:4] != MAGIC:
        raise ValueError('Not a denoiser checkpoint (bad magic)')
    offset = 4
    try:
        version, header_len = struct.unpack_from('<II', data, offset)
        offset += 8
        if version != FORMAT_VERSION:
            raise ValueError(
                f'Unsupported checkpoint format version {version}, expected {FORMAT_VERSION}'
            )
        header = json.loads(data[offset : offset + header_len].decode('utf-8'))
        offset += header_len
        arch = DenoiserArch.model_validate(header['arch'])

        (count,) = struct.unpack_from('<I', data, offset)
        offset += 4
        params: Dict[str, np.ndarray] = {}
        for _ in range(count):
            (name_len,) = struct.unpack_from('<I', data, offset)
            offset += 4
            name = data[offset : offset + name_len].decode('utf-8')
            offset += name_len
            (ndim,) = struct.unpack_from('<I', data, offset)
            offset += 4
            shape = struct.unpack_from(f'<{ndim}I', data, offset)
            offset += 4 * ndim
            size = int(np.prod(shape)) if ndim else 1
            values = np.frombuffer(data, dtype='<f4', count=size, offset=offset)
            offset += 4 * size
            params[name] = values.reshape(shape).astype(np.float32)
    except struct.error as e:
        raise ValueError(f'Truncated checkpoint: {str(e)}')

    if offset != len(data):
        raise ValueError(f'Checkpoint has {len(data) - offset} trailing bytes')
    if expected_arch is not None and arch != expected_arch:
        raise ValueError(
            f'Checkpoint architecture {arch.model_dump()} does not match '
            f'expected {expected_arch.model_dump()}'
        )
    return Denoiser(arch=arch, params=params)


def save_checkpoint(model: Denoiser, path: Union[str, Path]) -> Path:
    path = atomic_write_bytes(path, encode_checkpoint(model))
    logger.info(f'Checkpoint written: {path}')
    return path


def load_checkpoint(
    path: Union[str, Path], expected_arch: Optional[DenoiserArch] = None
) -> Denoiser:
    return decode_checkpoint(Path(path).read_bytes(), expected_arch)
