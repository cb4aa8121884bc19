"""
Test cases for the energy-distance quality metric.
"""

import os
import sys

import numpy as np
import pytest

# Add src directory to the path for imports
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../src')))

from src.models.metrics.quality import energy_distance


class TestEnergyDistance:
    def test_identical_batches(self):
        """Test that A = B gives exactly 0."""
        batch = np.random.default_rng(0).standard_normal((50, 2))

        assert energy_distance(batch, batch) == 0.0

    def test_singletons(self):
        """Test A = {0}, B = {2} -> 4."""
        assert energy_distance(np.array([[0.0]]), np.array([[2.0]])) == 4.0
        assert energy_distance(np.array([0.0]), np.array([2.0])) == 4.0

    def test_symmetry_and_nonnegativity(self):
        """Test d(A, B) == d(B, A) bit for bit and d >= 0 on random batches."""
        rng = np.random.default_rng(1)
        for _ in range(20):
            a = rng.standard_normal((rng.integers(1, 40), 3))
            b = rng.standard_normal((rng.integers(1, 40), 3)) + rng.normal()
            assert energy_distance(a, b) == energy_distance(b, a)
            assert energy_distance(a, b) >= 0.0

    def test_same_distribution_is_small(self):
        """Test two 1k draws from the same Gaussian stay below 0.05."""
        rng = np.random.default_rng(2)

        assert energy_distance(rng.standard_normal((1000, 2)), rng.standard_normal((1000, 2))) < 0.05

    def test_grows_with_shift(self):
        """Test that moving B away from A increases the distance."""
        rng = np.random.default_rng(3)
        a = rng.standard_normal((200, 2))
        b = rng.standard_normal((200, 2))

        distances = [energy_distance(a, b + shift) for shift in (0.0, 1.0, 3.0)]

        assert distances == sorted(distances)
        assert distances[2] > distances[0]

    def test_dim_mismatch(self):
        """Test rejection of batches of different dims."""
        with pytest.raises(ValueError, match='Dim mismatch'):
            energy_distance(np.zeros((3, 2)), np.zeros((3, 3)))

    def test_empty_batch(self):
        """Test rejection of empty batches."""
        with pytest.raises(ValueError, match='nonempty'):
            energy_distance(np.zeros((0, 2)), np.zeros((3, 2)))
