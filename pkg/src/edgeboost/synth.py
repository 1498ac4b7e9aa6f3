"""Random valid profiles and scheduling instances for property checks."""

from __future__ import annotations

import numpy as np

from .profiles import PROFILED_BATCH_SIZES, AccuracyProfile, LatencyProfile, enforce_monotone
from .scheduler import GapFrame, GapInstance, plan_cost


def random_latency_profile(rng: np.random.Generator, beta: int, subset: bool = True) -> LatencyProfile:
    """Random profile satisfying every :class:`LatencyProfile` invariant.

    Per-frame cost shrinks from one profiled size to the next, but never so
    fast that the whole batch gets cheaper.
    """
    mu = float(rng.uniform(0.0, 1.0))
    eps = np.concatenate([[0.0], np.cumsum(rng.uniform(0.0, 10.0, beta))])
    nu0 = float(rng.uniform(5.0, 40.0))
    drops = rng.uniform(0.0, nu0 / (beta + 1), beta)
    nu = np.concatenate([[nu0], nu0 - np.cumsum(drops)])
    sizes = list(PROFILED_BATCH_SIZES)
    if subset:
        extra = [n for n in sizes[1:] if rng.random() < 0.6]
        sizes = [1, *extra]
    grid = {}
    for k in range(beta + 1):
        per_frame = mu + eps[k] + nu[k]
        grid[(k, 1)] = per_frame
        prev_n = 1
        for n in sizes[1:]:
            low = per_frame * prev_n / n
            per_frame = float(rng.uniform(low, per_frame))
            grid[(k, n)] = per_frame * n
            prev_n = n
    return LatencyProfile(mu, tuple(eps.tolist()), tuple(nu.tolist()), grid)


def random_accuracy_profile(rng: np.random.Generator, beta: int, granularity: float = 0.1) -> AccuracyProfile:
    """Monotone profile built from raw (possibly negative) random gains."""
    n_buckets = round(1.0 / granularity)
    scale = np.linspace(0.2, 1.0, n_buckets)[:, None]
    raw = rng.normal(1.0, 1.5, size=(n_buckets, beta)) * scale
    rows = np.concatenate([np.zeros((n_buckets, 1)), np.cumsum(raw, axis=1)], axis=1)
    return enforce_monotone(AccuracyProfile(tuple(map(tuple, rows.tolist())), granularity))


def random_instance(
    rng: np.random.Generator,
    max_frames: int = 6,
    max_beta: int = 3,
    frames: int | None = None,
    beta: int | None = None,
) -> GapInstance:
    """Random instance whose budget falls between the all-zero and all-deepest costs."""
    m = int(frames if frames is not None else rng.integers(1, max_frames + 1))
    b = int(beta if beta is not None else rng.integers(1, max_beta + 1))
    latency = random_latency_profile(rng, b)
    accuracy = random_accuracy_profile(rng, b)
    gap_frames = tuple(GapFrame(i, float(rng.random())) for i in range(m))
    low = plan_cost({i: 0 for i in range(m)}, latency)
    high = plan_cost({i: b for i in range(m)}, latency)
    low, high = min(low, high), max(low, high)
    budget = float(rng.uniform(0.9 * low, 1.05 * high))
    return GapInstance(gap_frames, latency, accuracy, max(budget, 1e-3))
