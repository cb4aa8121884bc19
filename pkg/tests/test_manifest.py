"""
Test cases for run manifests: creation, persistence and artifact verification.
"""

import json
import os
import sys

import pytest

# Add src directory to the path for imports
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../src')))

from src.models.experiment.manifest import (
    MANIFEST_FORMAT_VERSION,
    MANIFEST_NAME,
    collect_artifacts,
    new_manifest,
    read_manifest,
    verify_manifest,
    write_manifest,
)
from src.shared.utils import git_blob_hash


@pytest.fixture
def run_dir(tmp_path):
    (tmp_path / 'checkpoints').mkdir()
    (tmp_path / 'checkpoints' / 'baseline.ckpt').write_bytes(b'weights')
    (tmp_path / 'data').mkdir()
    (tmp_path / 'data' / 'dataset.csv').write_text('x0,x1\n0.0,1.0\n')
    return tmp_path


@pytest.fixture
def manifest(run_dir):
    manifest = new_manifest({'name': 'unit'}, 'unit', 'none', 4)
    return manifest.model_copy(update={'status': 'completed', 'artifacts': collect_artifacts(run_dir)})


class TestNewManifest:
    def test_template_defaults(self):
        """Test that a new manifest starts from the template."""
        manifest = new_manifest({'name': 'unit'}, 'unit', 'dualmd', 2)

        assert manifest.format_version == MANIFEST_FORMAT_VERSION
        assert manifest.status == 'running'
        assert manifest.defense == 'dualmd'
        assert set(manifest.metrics) == {'attacks', 'quality', 'memorization', 'generalization', 'training'}
        assert manifest.skipped_attacks == []

    def test_metrics_json_is_canonical(self):
        """Test that key order does not change the metrics bytes."""
        first = new_manifest({}, 'a', 'none', 0).model_copy(update={'metrics': {'b': 1, 'a': 2}})
        second = new_manifest({}, 'a', 'none', 0).model_copy(update={'metrics': {'a': 2, 'b': 1}})

        assert first.metrics_json() == second.metrics_json()


class TestArtifacts:
    def test_collect(self, run_dir):
        """Test git-style hashes keyed by relative path."""
        artifacts = collect_artifacts(run_dir)

        assert artifacts == {
            'checkpoints/baseline.ckpt': git_blob_hash(b'weights'),
            'data/dataset.csv': git_blob_hash(b'x0,x1\n0.0,1.0\n'),
        }

    def test_manifest_and_hidden_files_excluded(self, run_dir, manifest):
        """Test that the manifest and temp files never list themselves."""
        write_manifest(manifest, run_dir)
        (run_dir / '.partial.tmp').write_bytes(b'')

        assert set(collect_artifacts(run_dir)) == {'checkpoints/baseline.ckpt', 'data/dataset.csv'}


class TestReadWrite:
    def test_round_trip(self, run_dir, manifest):
        """Test writing and reading back by file and by directory."""
        path = write_manifest(manifest, run_dir)

        assert path == run_dir / MANIFEST_NAME
        assert read_manifest(path) == manifest
        assert read_manifest(run_dir) == manifest

    def test_version_mismatch(self, run_dir, manifest):
        """Test that other format versions are refused."""
        path = write_manifest(manifest, run_dir)
        payload = json.loads(path.read_text())
        payload['format_version'] = MANIFEST_FORMAT_VERSION + 1
        path.write_text(json.dumps(payload))

        with pytest.raises(ValueError, match='format version'):
            read_manifest(path)


class TestVerify:
    def test_untouched_run(self, run_dir, manifest):
        """Test that an untouched run verifies."""
        write_manifest(manifest, run_dir)

        assert verify_manifest(run_dir).artifacts == manifest.artifacts

    def test_tampered_artifact(self, run_dir, manifest):
        """Test detection of a modified artifact."""
        write_manifest(manifest, run_dir)
        (run_dir / 'checkpoints' / 'baseline.ckpt').write_bytes(b'weights!')

        with pytest.raises(ValueError, match='was modified'):
            verify_manifest(run_dir / MANIFEST_NAME)

    def test_missing_artifact(self, run_dir, manifest):
        """Test detection of a deleted artifact."""
        write_manifest(manifest, run_dir)
        (run_dir / 'data' / 'dataset.csv').unlink()

        with pytest.raises(ValueError, match='Artifact missing'):
            verify_manifest(run_dir)
