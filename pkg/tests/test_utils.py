"""
Test cases for the shared persistence and seeding helpers.
"""

import json
import os
import sys
from http import HTTPStatus

import numpy as np
import pandas as pd
import pytest

# Add src directory to the path for imports
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../src')))

from src.shared.utils import (
    apply_overrides,
    atomic_write_bytes,
    atomic_write_csv,
    atomic_write_json,
    canonical_json,
    derive_seed,
    file_hash,
    git_blob_hash,
    parse_override,
    response,
    substream_rngs,
)


class TestResponse:
    def test_default_envelope(self):
        """Test status code, JSON content type and serialized body."""
        result = response({'ok': True})

        assert result['statusCode'] == 200
        assert result['headers'] == {'Content-Type': 'application/json'}
        assert json.loads(result['body']) == {'ok': True}

    def test_status_code_and_extra_headers(self):
        """Test HTTPStatus conversion and header merge."""
        result = response('bad', HTTPStatus.BAD_REQUEST, headers={'X-Run': '1'})

        assert result['statusCode'] == 400
        assert result['headers']['X-Run'] == '1'


class TestAtomicWrites:
    def test_write_bytes_creates_parents_and_leaves_no_temp(self, tmp_path):
        """Test that the destination exists and no temp file remains."""
        path = atomic_write_bytes(tmp_path / 'a' / 'b.bin', b'payload')

        assert path.read_bytes() == b'payload'
        assert [p.name for p in path.parent.iterdir()] == ['b.bin']

    def test_write_json_is_canonical(self, tmp_path):
        """Test that key order does not change the written bytes."""
        first = atomic_write_json(tmp_path / 'a.json', {'b': 1, 'a': [1, 2]})
        second = atomic_write_json(tmp_path / 'b.json', {'a': [1, 2], 'b': 1})

        assert first.read_bytes() == second.read_bytes()
        assert first.read_text() == canonical_json({'a': [1, 2], 'b': 1}) + '\n'

    def test_write_csv_without_index(self, tmp_path):
        """Test that CSV output has no index column."""
        path = atomic_write_csv(tmp_path / 'x.csv', pd.DataFrame({'iteration': [1], 'loss': [0.5]}))

        assert path.read_text().splitlines() == ['iteration,loss', '1,0.5']


class TestHashes:
    def test_git_blob_hash_matches_git(self):
        """Test the hash git assigns to an empty blob and to 'hello\\n'."""
        assert git_blob_hash(b'') == 'e69de29bb2d1d6434b8b29ae775ad8c2e48c5391'
        assert git_blob_hash(b'hello\n') == 'ce013625030ba8dba906f756967f9e9ca394464a'

    def test_file_hash(self, tmp_path):
        """Test that file_hash hashes the file content."""
        path = tmp_path / 'f.txt'
        path.write_bytes(b'hello\n')

        assert file_hash(path) == git_blob_hash(b'hello\n')


class TestSeeds:
    def test_derive_seed_is_deterministic(self):
        """Test the same (master, stage, index) gives the same seed."""
        assert derive_seed(1, 'train', 0) == derive_seed(1, 'train', 0)

    def test_derive_seed_separates_stages_indices_and_masters(self):
        """Test that stage, index and master each change the seed."""
        base = derive_seed(1, 'train', 0)

        assert derive_seed(1, 'sample', 0) != base
        assert derive_seed(1, 'train', 1) != base
        assert derive_seed(2, 'train', 0) != base

    def test_substreams_depend_only_on_seed_and_index(self):
        """Test that substream i is the same whatever the stream count."""
        short = substream_rngs(7, 2)
        long = substream_rngs(7, 5)

        assert short[1].standard_normal() == long[1].standard_normal()
        assert np.random.default_rng([7, 3]).random() == substream_rngs(7, 4)[3].random()


class TestOverrides:
    def test_parse_override_decodes_json_values(self):
        """Test numbers, lists and plain strings."""
        assert parse_override('train.iterations=500') == (['train', 'iterations'], 500)
        assert parse_override('attacks=[]') == (['attacks'], [])
        assert parse_override('defense=dualmd') == (['defense'], 'dualmd')

    @pytest.mark.parametrize('assignment', ['no-equals', '=3'])
    def test_parse_override_rejects_malformed(self, assignment):
        """Test that malformed assignments raise ValueError."""
        with pytest.raises(ValueError, match='Invalid override'):
            parse_override(assignment)

    def test_apply_overrides_does_not_mutate_input(self):
        """Test nested assignment on a copy."""
        payload = {'train': {'iterations': 10}}

        result = apply_overrides(payload, ['train.iterations=20', 'dataset.dim=3'])

        assert result == {'train': {'iterations': 20}, 'dataset': {'dim': 3}}
        assert payload == {'train': {'iterations': 10}}
