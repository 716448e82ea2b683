"""
Pytest fixtures and configuration for GMI survival tests.
"""

from collections.abc import Callable
from pathlib import Path

import numpy as np
import pytest

from src.core.simulation import synthetic_trial_dataset
from src.data.models import Dataset
from src.utils.config import Config


@pytest.fixture
def toy_dataset() -> Dataset:
    """Three subjects with distinct t0 and one censored follow-up."""
    return Dataset.from_arrays(
        t0=[2.0, 4.0, 8.0],
        y1=[3.0, 4.0, 12.0],
        delta1=[1, 0, 1],
        source="toy",
    )


@pytest.fixture
def small_dataset() -> Dataset:
    """Twelve subjects, mixed censoring, distinct t0."""
    return Dataset.from_arrays(
        t0=[3.1, 5.4, 2.2, 7.9, 4.4, 6.1, 1.8, 9.3, 3.7, 5.0, 2.9, 6.6],
        y1=[4.0, 5.1, 3.9, 6.2, 7.5, 8.8, 2.0, 10.4, 3.0, 9.9, 4.6, 5.2],
        delta1=[1, 1, 0, 1, 1, 0, 1, 1, 1, 0, 1, 1],
        source="small",
    )


@pytest.fixture
def random_dataset() -> Callable[..., Dataset]:
    """Factory for seeded random datasets with small-integer times (ratio ties occur)."""

    def _make(
        seed: int,
        n: int,
        censor_prob: float = 0.3,
        continuous: int = 0,
        categorical: bool = False,
        integer_times: bool = True,
    ) -> Dataset:
        rng = np.random.default_rng(seed)
        if integer_times:
            t0 = rng.integers(1, 6, size=n).astype(float)
            y1 = rng.integers(1, 9, size=n).astype(float)
        else:
            t0 = rng.lognormal(1.0, 0.5, size=n)
            y1 = rng.lognormal(1.2, 0.6, size=n)
        delta = (rng.random(n) > censor_prob).astype(int)
        z = rng.normal(size=(n, continuous)) if continuous else None
        v = [[str(level)] for level in rng.integers(0, 2, size=n)] if categorical else None
        return Dataset.from_arrays(t0, y1, delta, z=z, v=v, source=f"random({seed})")

    return _make


@pytest.fixture(scope="session")
def trial_dataset() -> Dataset:
    """34-record synthetic stand-in for the trial data."""
    return synthetic_trial_dataset()


@pytest.fixture
def fast_config() -> Config:
    """Default configuration with a small bootstrap for quick tests."""
    config = Config()
    config.bootstrap.resamples = 40
    config.bootstrap.seed = 7
    return config


@pytest.fixture
def csv_file(tmp_path: Path) -> Callable[[str, str], Path]:
    """Write CSV text to a temporary file and return its path."""

    def _write(text: str, name: str = "data.csv") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write
