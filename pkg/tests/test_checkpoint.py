"""
Test cases for the denoiser checkpoint format.
"""

import os
import struct
import sys

import numpy as np
import pytest

# Add src directory to the path for imports
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../src')))

from src.models.denoiser.checkpoint import (
    MAGIC,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from src.models.denoiser.network import DenoiserArch, init_denoiser


# Fixtures
@pytest.fixture
def arch():
    return DenoiserArch(input_dim=2, hidden=(8, 8), embed_dim=4, T=10, n_tokens=3)


@pytest.fixture
def model(arch):
    return init_denoiser(arch, 7)


class TestCheckpoint:
    def test_save_and_load(self, model, arch, tmp_path):
        """Test that a saved checkpoint loads with identical parameters and predictions."""
        path = save_checkpoint(model, tmp_path / 'ckpt' / 'baseline.ckpt')

        loaded = load_checkpoint(path, expected_arch=arch)

        assert loaded.arch == arch
        for name in model.params:
            np.testing.assert_array_equal(loaded.params[name], model.params[name])
        x = np.array([[0.1, 0.2], [0.3, -0.4]])
        np.testing.assert_array_equal(loaded.predict(x, 5, 1), model.predict(x, 5, 1))

    def test_encoding_is_deterministic(self, model):
        """Test that the same model encodes to the same bytes."""
        assert encode_checkpoint(model) == encode_checkpoint(model.copy())

    def test_header_layout(self, model):
        """Test magic and little-endian format version."""
        data = encode_checkpoint(model)

        assert data[:4] == MAGIC
        assert struct.unpack_from('<I', data, 4)[0] == 1

    def test_architecture_mismatch(self, model):
        """Test that loading against another architecture fails."""
        other = DenoiserArch(input_dim=2, hidden=(16,), embed_dim=4, T=10, n_tokens=3)

        with pytest.raises(ValueError, match='does not match'):
            decode_checkpoint(encode_checkpoint(model), expected_arch=other)

    def test_bad_magic(self, model):
        """Test that foreign bytes are rejected."""
        with pytest.raises(ValueError, match='bad magic'):
            decode_checkpoint(b'XXXX' + encode_checkpoint(model)[4:])

    def test_truncated(self, model):
        """Test that a cut-off file is rejected."""
        with pytest.raises(ValueError):
            decode_checkpoint(encode_checkpoint(model)[:-10])

    def test_trailing_bytes(self, model):
        """Test that extra bytes after the last block are rejected."""
        with pytest.raises(ValueError, match='trailing'):
            decode_checkpoint(encode_checkpoint(model) + b'\x00')

    def test_unsupported_version(self, model):
        """Test that another format version is rejected."""
        data = bytearray(encode_checkpoint(model))
        struct.pack_into('<I', data, 4, 99)

        with pytest.raises(ValueError, match='format version'):
            decode_checkpoint(bytes(data))
