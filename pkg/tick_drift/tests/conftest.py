from pathlib import Path

import pytest

from tick_drift.stochastic_kernels import RandomStream

CONFIG_DIR = Path(__file__).resolve().parents[2] / "configs"


@pytest.fixture
def stream():
    return RandomStream(20130101)


@pytest.fixture
def config_dir():
    return CONFIG_DIR
