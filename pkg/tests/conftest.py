from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import acceptance_log
from cfx import MLPSpec, planted_bump_dataset, train_mlp

try:
    from hypothesis import settings

    settings.register_profile("cfx", deadline=None, max_examples=50)
    settings.load_profile("cfx")
except ImportError:
    pass


@pytest.fixture(scope="session")
def bump_ds():
    """Benchmark-scale planted-bump set: T=100, N=200, two classes."""
    return planted_bump_dataset()


@pytest.fixture(scope="session")
def bump_mlp(bump_ds):
    return train_mlp(bump_ds, MLPSpec(hidden_sizes=(32,), epochs=80, seed=0))


@pytest.fixture(scope="session")
def small_ds():
    """Fast variant for per-generator tests: T=40, N=40."""
    return planted_bump_dataset(n=40, length=40, bump_len=8, noise=0.15, seed=1)


@pytest.fixture(scope="session")
def small_mlp(small_ds):
    return train_mlp(small_ds, MLPSpec(hidden_sizes=(16,), epochs=80, seed=0))


@pytest.fixture()
def rng():
    return np.random.default_rng(0)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not acceptance_log.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance_log.LINES:
        terminalreporter.write_line(line)
