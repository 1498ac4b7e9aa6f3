"""Scalar evaluators for the two-stage adversarial training objective.

These take discriminator probabilities and per-exit detection losses as
plain numbers, so the objective can be checked without any network.
Expectations are sample means; logs are natural.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .core import InvalidInputError

PROB_FLOOR = 1e-12


def _probs(values: Sequence[float], name: str) -> list[float]:
    values = [float(v) for v in values]
    if not values:
        raise InvalidInputError(f"{name} must not be empty")
    for v in values:
        if not (0.0 <= v <= 1.0):
            raise InvalidInputError(f"{name}: probability {v!r} outside [0, 1]")
    return values


@dataclass(frozen=True)
class DiscriminatorOutputs:
    df_real: Sequence[float]
    df_gen: Sequence[float]
    di_real: Sequence[float]
    di_gen: Sequence[float]


@dataclass(frozen=True)
class ExitLosses:
    per_exit: Sequence[float]

    def __post_init__(self) -> None:
        if len(self.per_exit) == 0:
            raise InvalidInputError("per_exit must hold one loss per exit (beta + 1 values)")
        if any(v < 0 for v in self.per_exit):
            raise InvalidInputError("detection losses must be non-negative")

    @property
    def beta(self) -> int:
        return len(self.per_exit) - 1


def discriminator_expectation(probs: Sequence[float]) -> float:
    """Mean of ``log(max(p, 1e-12))`` over the supplied probabilities."""
    values = _probs(probs, "probs")
    return math.fsum(math.log(max(p, PROB_FLOOR)) for p in values) / len(values)


def stage1_loss(outs: DiscriminatorOutputs) -> float:
    df_gen = _probs(outs.df_gen, "df_gen")
    di_gen = _probs(outs.di_gen, "di_gen")
    return (
        discriminator_expectation(outs.df_real)
        + discriminator_expectation([1.0 - p for p in df_gen])
        + discriminator_expectation(outs.di_real)
        + discriminator_expectation([1.0 - p for p in di_gen])
    )


def multi_exit_detection_loss(exits: ExitLosses | Sequence[float]) -> float:
    if not isinstance(exits, ExitLosses):
        exits = ExitLosses(tuple(exits))
    return math.fsum(exits.per_exit) / len(exits.per_exit)


def stage2_loss(exits: ExitLosses | Sequence[float], s1: float) -> float:
    # L_S1 enters as an unweighted regularizer
    return multi_exit_detection_loss(exits) + s1
