"""
Shared pytest fixtures for metasymnet tests.
"""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from benchmarks import Dataset, SamplingSpec, get_benchmark, realize
from models import Hyperparams
from operators import DEFAULT_POLICY


@pytest.fixture
def policy():
    """Default protection thresholds."""
    return DEFAULT_POLICY


@pytest.fixture
def rng():
    """Seeded generator for test data."""
    return np.random.default_rng(1234)


@pytest.fixture
def identity_dataset():
    """y = x1 on 20 uniform points in [-1, 1]."""
    spec = SamplingSpec("U", -1.0, 1.0, 20, seed=7)
    X = np.random.default_rng(7).uniform(-1.0, 1.0, size=(20, 1))
    return Dataset(X, X[:, 0].copy(), "identity", spec)


@pytest.fixture
def constant_dataset():
    """Constant target y = 3 (degenerate R²)."""
    X = np.linspace(-1.0, 1.0, 10)[:, np.newaxis]
    return Dataset(X, np.full(10, 3.0), "constant")


@pytest.fixture
def nguyen1_dataset():
    """Nguyen-1 realised with seed 0."""
    return realize(get_benchmark("Nguyen-1"), seed=0)


@pytest.fixture
def fast_hyper():
    """Small budget hyperparameters for end-to-end tests."""
    return Hyperparams(
        n_wb=5,
        n_dz=5,
        max_outer_iters=3,
        refine_iters=20,
        time_budget_s=None,
        warmup_rounds=2,
    )


@pytest.fixture
def write_yaml(tmp_path):
    """Write a settings file and return its path."""

    def _write(text: str, name: str = "settings.yaml") -> str:
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return _write
