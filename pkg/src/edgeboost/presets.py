"""Bundled demo profiles, GPU latency presets and demo trace settings."""

from __future__ import annotations

from dataclasses import dataclass

from .profiles import PROFILED_BATCH_SIZES, AccuracyProfile, LatencyProfile
from .scheduler import GapFrame, GapInstance
from .vap import SinusoidalRate, TraceConfig

DEMO_BETA = 5
DISCRIMINATOR_MS = 0.5

# Top-bucket gain curve over exits 0..5; the deepest exit beats exit 1 by 6.15 points.
_TOP_ROW = (0.0, 4.0, 6.5, 8.2, 9.4, 10.15)
# Scale of each difficulty bucket relative to the top one. Bucket 8 sits
# 5.54 points below bucket 9 at the deepest exit.
_BUCKET_SCALE = (0.0, 0.0, 0.0, 0.01, 0.04, 0.10, 0.18, 0.30, (10.15 - 5.54) / 10.15, 1.0)


@dataclass(frozen=True)
class DetectorPreset:
    name: str
    detector_ms: float  # single-frame detector latency at exit 0
    capacity_fps: float  # saturated throughput of the unenhanced detector
    generator_ratio: float = 0.65  # full generator cost relative to detector_ms
    skip_ratio: float = 0.2  # detector cost saved when all beta layers are skipped


DETECTORS = {
    "efficientdet-d0": DetectorPreset("efficientdet-d0", 20.0, 120.0),
    "yolov3": DetectorPreset("yolov3", 35.71, 84.0, generator_ratio=23.31 / 35.71),
    "faster-rcnn": DetectorPreset("faster-rcnn", 120.0, 12.0),
}


def demo_accuracy_profile() -> AccuracyProfile:
    return AccuracyProfile(tuple(tuple(s * g for g in _TOP_ROW) for s in _BUCKET_SCALE), 0.1)


def demo_latency_profile(detector: str = "yolov3", beta: int = DEMO_BETA) -> LatencyProfile:
    """Latency profile whose unenhanced batched throughput matches the preset.

    A batch of ``n`` frames costs ``n * mu_d + I * (a + (1 - a) n)`` with
    ``I = epsilon + nu``; the fixed fraction ``a`` is solved so that the
    per-frame cost at the largest profiled batch equals ``1000 / capacity``.
    """
    p = DETECTORS[detector]
    mu = DISCRIMINATOR_MS
    eps = tuple(p.generator_ratio * p.detector_ms * k / beta for k in range(beta + 1))
    nu = tuple(p.detector_ms * (1.0 - p.skip_ratio * k / beta) for k in range(beta + 1))
    n_max = PROFILED_BATCH_SIZES[-1]
    ratio = (1000.0 / p.capacity_fps - mu) / p.detector_ms
    a = (1.0 - ratio) / (1.0 - 1.0 / n_max)
    if not 0.0 <= a <= 1.0:
        raise ValueError(f"preset {detector!r} cannot reach {p.capacity_fps} fps")
    grid = {}
    for k in range(beta + 1):
        work = eps[k] + nu[k]
        for n in PROFILED_BATCH_SIZES:
            grid[(k, n)] = mu + work if n == 1 else n * mu + work * (a + (1.0 - a) * n)
    return LatencyProfile(mu, eps, nu, grid)


def demo_trace_config(seed: int = 7, duration_s: float = 600.0) -> TraceConfig:
    """Ten minutes of four 25 fps cameras with a slow load swing."""
    return TraceConfig(
        duration_s=duration_s,
        fps=25.0,
        cameras=4,
        rate_process=SinusoidalRate(period_s=120.0, amplitude=0.5),
        seed=seed,
    )


# Thresholds tuned so survivors land in the 11-78 frames/s regime on the demo trace.
DEMO_FILTERS = {
    "glimpse": {"diff_threshold": 0.008},
    "vigil": {"min_objects": 4},
    "noscope": {"diff_threshold": 0.005, "conf_threshold": 0.85},
}


def worked_latency_profile() -> LatencyProfile:
    """beta = 2, single-frame latencies 10 / 15 / 20 ms, no batching benefit."""
    single = (10.0, 15.0, 20.0)
    grid = {(k, n): n * single[k] for k in range(3) for n in PROFILED_BATCH_SIZES}
    return LatencyProfile(0.0, (0.0, 5.0, 10.0), (10.0, 10.0, 10.0), grid)


def worked_accuracy_profile() -> AccuracyProfile:
    rows = [(0.0, 0.0, 0.0)] * 10
    rows[5] = (0.0, 1.0, 1.5)
    rows[9] = (0.0, 4.0, 6.0)
    return AccuracyProfile(tuple(rows), 0.1)


def worked_instance(budget_ms: float = 50.0) -> GapInstance:
    frames = (GapFrame(0, 0.9), GapFrame(1, 0.5), GapFrame(2, 0.9))
    return GapInstance(frames, worked_latency_profile(), worked_accuracy_profile(), budget_ms)
