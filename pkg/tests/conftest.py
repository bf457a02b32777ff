"""Shared helpers for the test suite."""

from __future__ import annotations

import numpy as np
import pytest


def random_spd(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    """Well-conditioned random symmetric positive-definite matrix."""
    a = rng.standard_normal((n, n))
    return scale * (a @ a.T + n * np.eye(n))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240817)
