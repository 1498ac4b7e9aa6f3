import numpy as np
import pytest

from edgeboost import presets
from edgeboost.profiles import AccuracyProfile, LatencyProfile
from edgeboost.vap import generate_trace


def make_latency(singles, grid_extra=None, mu=0.0):
    """Profile with nu carrying the whole single-frame cost minus mu."""
    beta = len(singles) - 1
    eps = tuple(0.0 for _ in singles)
    nu = tuple(s - mu for s in singles)
    # nu must be non-increasing: put the growth into epsilon instead
    if any(b > a for a, b in zip(nu, nu[1:])):
        eps = tuple(s - singles[0] for s in singles)
        nu = tuple(singles[0] - mu for _ in singles)
    grid = {(k, 1): mu + eps[k] + nu[k] for k in range(beta + 1)}
    grid.update(grid_extra or {})
    return LatencyProfile(mu, eps, nu, grid)


def gains_table(rows, beta, n_buckets=10):
    table = [tuple([0.0] * (beta + 1))] * n_buckets
    for b, row in rows.items():
        table[b] = tuple(float(x) for x in row)
    return AccuracyProfile(tuple(table), 1.0 / n_buckets)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def demo_trace():
    return generate_trace(presets.demo_trace_config())


@pytest.fixture(scope="session")
def demo_profiles():
    return presets.demo_latency_profile(), presets.demo_accuracy_profile()
