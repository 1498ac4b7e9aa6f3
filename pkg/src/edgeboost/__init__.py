"""Opportunistic frame enhancement on idle edge GPU time.

Difficulty scoring, multi-exit enhancement profiles, budgeted exit-level
scheduling, adversarial loss evaluators and a windowed pipeline simulator.
"""

from .core import (
    DifficultyScore,
    ExitLevel,
    Frame,
    InvalidInputError,
    RoiDetection,
    bucket_index,
    classify_hard,
    confidence_score,
    exit_layer_split,
)
from .profiles import (
    AccuracyProfile,
    LatencyProfile,
    ProfileError,
    ProfileSample,
    accuracy_gain,
    build_accuracy_profile,
    build_latency_profile,
    deserialize_profiles,
    enforce_monotone,
    latency_batch,
    latency_single,
    serialize_profiles,
)
from .scheduler import (
    EnhancementPlan,
    GapFrame,
    GapInstance,
    OracleCapExceeded,
    compare_schedulers,
    marginal_gain,
    plan_cost,
    plan_gain,
    schedule_exact,
    schedule_heuristic,
)

__version__ = "0.1.0"

__all__ = [
    "DifficultyScore",
    "ExitLevel",
    "Frame",
    "InvalidInputError",
    "RoiDetection",
    "bucket_index",
    "classify_hard",
    "confidence_score",
    "exit_layer_split",
    "AccuracyProfile",
    "LatencyProfile",
    "ProfileError",
    "ProfileSample",
    "accuracy_gain",
    "build_accuracy_profile",
    "build_latency_profile",
    "deserialize_profiles",
    "enforce_monotone",
    "latency_batch",
    "latency_single",
    "serialize_profiles",
    "EnhancementPlan",
    "GapFrame",
    "GapInstance",
    "OracleCapExceeded",
    "compare_schedulers",
    "marginal_gain",
    "plan_cost",
    "plan_gain",
    "schedule_exact",
    "schedule_heuristic",
]
