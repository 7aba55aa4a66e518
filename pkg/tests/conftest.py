from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def hyperboloid(y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    return np.concatenate([[math.sqrt(1.0 + y @ y)], y])


def random_hyperbolic_gram(rng: np.random.Generator, n: int, spread: float = 0.8) -> np.ndarray:
    """Gram matrix of n+1 random points near the origin of H^n."""
    pts = np.stack([hyperboloid(rng.normal(size=n) * spread) for _ in range(n + 1)])
    eta = np.concatenate([[1.0], -np.ones(n)])
    g = (pts * eta) @ pts.T
    np.fill_diagonal(g, 1.0)
    return g


def random_spherical_gram(rng: np.random.Generator, n: int, spread: float = 0.5) -> np.ndarray:
    """Gram matrix of n+1 random unit vectors clustered around the north pole of S^n."""
    pts = np.zeros((n + 1, n + 1))
    pts[:, 0] = 1.0
    pts[:, 1:] = rng.normal(size=(n + 1, n)) * spread
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    g = pts @ pts.T
    np.fill_diagonal(g, 1.0)
    return g


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance verdicts, one line each, after the run."""
    import sys

    lines = []
    for name, mod in list(sys.modules.items()):
        if name.endswith("test_acceptance"):
            lines = getattr(mod, "RESULTS", [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
