from __future__ import annotations

import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("default")


def random_rotation(rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def tangents_of(circle, angles) -> np.ndarray:
    """Unit-normal lines tangent to ``circle`` with normals at ``angles``."""
    angles = np.asarray(angles, dtype=float)
    n = np.column_stack([np.cos(angles), np.sin(angles)])
    c = circle.r - n @ circle.center
    return np.column_stack([n, c])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
