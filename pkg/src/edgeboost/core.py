"""Shared domain types, difficulty scoring and exit-level bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

HARD_THRESHOLD = 0.6
DEFAULT_GRANULARITY = 0.1


class InvalidInputError(ValueError):
    """Raised when a value violates a documented precondition."""


def _check_fraction(value: float, name: str) -> None:
    if not (0.0 <= value <= 1.0):
        raise InvalidInputError(f"{name} must lie in [0, 1], got {value!r}")


@dataclass(frozen=True)
class RoiDetection:
    confidence: float
    class_id: int = 0

    def __post_init__(self) -> None:
        _check_fraction(self.confidence, "confidence")


@dataclass(frozen=True)
class Frame:
    """One unit of work flowing through a pipeline.

    ``rois`` are ground-truth detections used by the simulator; the
    ``cheap_*`` fields stand in for the outputs of lightweight filter
    models. ``camera`` identifies the source stream so temporal filters
    compare frames of the same camera only.
    """

    id: int
    arrival_time_ms: float
    rois: tuple[RoiDetection, ...] = ()
    content_signature: float = 0.0
    cheap_object_count: int = 0
    cheap_confidence: float = 1.0
    camera: int = 0

    def __post_init__(self) -> None:
        if self.id < 0:
            raise InvalidInputError(f"frame id must be non-negative, got {self.id}")
        if self.cheap_object_count < 0:
            raise InvalidInputError("cheap_object_count must be non-negative")
        _check_fraction(self.content_signature, "content_signature")
        _check_fraction(self.cheap_confidence, "cheap_confidence")


@dataclass(frozen=True)
class ExitLevel:
    kappa: int
    beta: int

    def __post_init__(self) -> None:
        if self.beta < 1:
            raise InvalidInputError(f"beta must be positive, got {self.beta}")
        if not (0 <= self.kappa <= self.beta):
            raise InvalidInputError(f"kappa {self.kappa} outside [0, {self.beta}]")

    @property
    def enhanced(self) -> bool:
        return self.kappa > 0


@dataclass(frozen=True)
class DifficultyScore:
    confidence_score: float
    has_objects: bool = True
    difficulty: float = field(init=False)

    def __post_init__(self) -> None:
        _check_fraction(self.confidence_score, "confidence_score")
        if not self.has_objects and self.confidence_score != 1.0:
            raise InvalidInputError("frames without objects must score 1.0")
        object.__setattr__(self, "difficulty", 1.0 - self.confidence_score)


def confidence_score(rois: Sequence[RoiDetection | float]) -> DifficultyScore:
    """Mean RoI confidence of a frame; empty frames count as fully confident."""
    values = [r.confidence if isinstance(r, RoiDetection) else float(r) for r in rois]
    for v in values:
        _check_fraction(v, "confidence")
    if not values:
        return DifficultyScore(1.0, has_objects=False)
    # offsets from the minimum keep constant lists exact; fsum keeps order irrelevant
    low = min(values)
    return DifficultyScore(min(1.0, low + math.fsum(v - low for v in values) / len(values)))


def classify_hard(score: DifficultyScore, threshold: float = HARD_THRESHOLD) -> bool:
    _check_fraction(threshold, "threshold")
    return score.confidence_score < threshold


def bucket_count(granularity: float) -> int:
    """Number of equal-width buckets covering [0, 1]; rejects widths that do not divide 1."""
    if not (0.0 < granularity <= 1.0):
        raise InvalidInputError(f"granularity must lie in (0, 1], got {granularity!r}")
    count = round(1.0 / granularity)
    if abs(count * granularity - 1.0) > 1e-9:
        raise InvalidInputError(f"granularity {granularity!r} does not divide 1 evenly")
    return count


def bucket_index(difficulty: float, granularity: float = DEFAULT_GRANULARITY) -> int:
    _check_fraction(difficulty, "difficulty")
    count = bucket_count(granularity)
    # multiply by the bucket count rather than divide by the width: 0.3 / 0.1 < 3
    return min(int(math.floor(difficulty * count + 1e-9)), count - 1)


def exit_layer_split(level: ExitLevel) -> tuple[int, int]:
    """Return ``(decoder_layers_used, backbone_layers_skipped)`` for an exit.

    The decoder's kappa-th layer feeds the backbone's (beta - kappa)-th
    layer, so kappa decoder layers run and kappa backbone layers are
    skipped. Level 0 is the unmodified detector.
    """
    return level.kappa, level.kappa
