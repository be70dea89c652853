import numpy as np
import pytest

from accelopt import make_logistic, make_quadratic, synthetic_logistic_dataset
from accelopt.reporting import CACHE_ENV_VAR


@pytest.fixture(autouse=True)
def isolated_cache(tmp_path, monkeypatch):
    """Point the reference-solution cache at a per-test directory."""
    monkeypatch.setenv(CACHE_ENV_VAR, str(tmp_path / "cache"))


@pytest.fixture
def quadratic_20d():
    rng = np.random.default_rng(0)
    return make_quadratic(np.linspace(1.0, 10.0, 20), rng.standard_normal(20))


@pytest.fixture
def logistic_small():
    dataset = synthetic_logistic_dataset(200, 10, 0)
    return make_logistic(dataset), dataset
