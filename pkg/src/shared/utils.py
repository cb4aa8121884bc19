import hashlib
import json
import os
import tempfile
import zlib
from http import HTTPStatus
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd


def response(
    message: Any,
    status_code: Union[int, HTTPStatus] = HTTPStatus.OK,
    headers: Optional[Dict[str, str]] = None,
) -> Dict[str, Any]:
    """
    Build the standardized response envelope returned by every handler.

    Args:
        message: Content to be serialized as JSON for the response body.
        status_code: HTTP-style status code (int or HTTPStatus). Defaults to HTTPStatus.OK.
        headers: Additional headers merged into the default headers.

    Returns:
        Dict[str, Any]: Dictionary with keys:
            - statusCode (int): Numeric status code.
            - headers (Dict[str, str]): Defaults to {"Content-Type": "application/json"}.
            - body (str): JSON-serialized representation of `message`.
    """
    sc = int(status_code)
    default_headers = {'Content-Type': 'application/json'}
    if headers:
        default_headers.update(headers)

    return {
        'statusCode': sc,
        'headers': default_headers,
        'body': json.dumps(message, default=str),
    }


def canonical_json(payload: Any) -> str:
    """Serialize with sorted keys and fixed separators so equal values give equal bytes."""
    return json.dumps(payload, sort_keys=True, indent=2, separators=(',', ': '))


def atomic_write_bytes(path: Union[str, Path], data: bytes) -> Path:
    """
    Write bytes to `path` atomically (temp file in the same directory, then rename).

    Args:
        path: Destination file path; parent directories are created
        data: Raw bytes to write

    Returns:
        The destination path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f'.{path.name}.', suffix='.tmp')
    try:
        with os.fdopen(fd, 'wb') as f:
            f.write(data)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.remove(tmp_name)
        raise
    return path


def atomic_write_text(path: Union[str, Path], text: str) -> Path:
    """Text variant of atomic_write_bytes (UTF-8)."""
    return atomic_write_bytes(path, text.encode('utf-8'))


def atomic_write_json(path: Union[str, Path], payload: Any) -> Path:
    """Write `payload` as canonical JSON atomically."""
    return atomic_write_text(path, canonical_json(payload) + '\n')


def atomic_write_csv(path: Union[str, Path], frame: pd.DataFrame) -> Path:
    """Write a DataFrame as CSV (no index) atomically."""
    return atomic_write_text(path, frame.to_csv(index=False))


def git_blob_hash(data: bytes) -> str:
    """Git-style content hash: sha1 over 'blob <len>\\0' followed by the content."""
    header = f'blob {len(data)}\0'.encode('ascii')
    return hashlib.sha1(header + data).hexdigest()


def file_hash(path: Union[str, Path]) -> str:
    """Git-style content hash of a file on disk."""
    return git_blob_hash(Path(path).read_bytes())


def derive_seed(master_seed: int, stage: str, index: int = 0) -> int:
    """
    Derive a child seed from the master seed, a stage name and an index.

    The rule is SeedSequence([master, crc32(stage), index]) and the first
    32-bit word of its state. Any sub-stage can be rerun on its own.
    """
    stage_key = zlib.crc32(stage.encode('utf-8'))
    sequence = np.random.SeedSequence([int(master_seed), stage_key, int(index)])
    return int(sequence.generate_state(1)[0])


def substream_rngs(seed: int, count: int) -> List[np.random.Generator]:
    """One generator per sample index: SeedSequence([seed, index])."""
    return [np.random.default_rng([int(seed), i]) for i in range(count)]


def parse_override(assignment: str) -> tuple:
    """
    Parse a 'dotted.key=value' CLI override.

    The value is decoded as JSON when possible (numbers, booleans, lists,
    null) and kept as a plain string otherwise.

    Raises:
        ValueError: If the assignment has no '=' or an empty key
    """
    if '=' not in assignment:
        raise ValueError(f"Invalid override '{assignment}': expected key=value")
    key, raw_value = assignment.split('=', 1)
    key = key.strip()
    if not key:
        raise ValueError(f"Invalid override '{assignment}': empty key")
    try:
        value = json.loads(raw_value)
    except json.JSONDecodeError:
        value = raw_value
    return key.split('.'), value


def apply_overrides(payload: Dict[str, Any], overrides: Sequence[str]) -> Dict[str, Any]:
    """Apply a list of 'dotted.key=value' overrides to a nested dict (copy)."""
    result = json.loads(json.dumps(payload))
    for assignment in overrides:
        keys, value = parse_override(assignment)
        node = result
        for key in keys[:-1]:
            if not isinstance(node.get(key), dict):
                node[key] = {}
            node = node[key]
        node[keys[-1]] = value
    return result
