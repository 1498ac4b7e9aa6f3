"""Windowed simulation of a filtered pipeline with opportunistic enhancement.

Frames are grouped into fixed windows by arrival time. In each window the
pipeline filter picks survivors, the discriminator estimates their
difficulty (each estimate costs ``mu_d`` of GPU time), the chosen
scheduler plans exit levels against the remaining budget, and a serial
executor runs one batch per level. Plans are made on the *estimated*
difficulty but rewarded with the *true* difficulty.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import InvalidInputError, bucket_count, bucket_index, confidence_score
from .profiles import AccuracyProfile, LatencyProfile
from .scheduler import (
    DEFAULT_ORACLE_LIMIT,
    EnhancementPlan,
    GapFrame,
    GapInstance,
    plan_cost,
    schedule_exact,
    schedule_greedy_arrival,
    schedule_heuristic,
    schedule_none,
)
from .vap import FilterConfig, Frame, PassThrough

SCHEDULERS = ("none", "greedy_arrival", "heuristic", "oracle")
CSV_COLUMNS = ("window", "arrivals", "survivors", "busy_ms", "utilization", "gain", "misses")


@dataclass(frozen=True)
class DiscriminatorModel:
    noise_sigma: float = 0.0
    confusion: tuple[tuple[float, ...], ...] | None = None
    latency_ms: float = 0.5
    granularity: float = 0.1

    def __post_init__(self) -> None:
        if self.noise_sigma < 0:
            raise InvalidInputError("noise_sigma must be non-negative")
        if self.latency_ms < 0:
            raise InvalidInputError("latency_ms must be non-negative")
        if self.confusion is not None:
            n = bucket_count(self.granularity)
            rows = tuple(tuple(float(p) for p in row) for row in self.confusion)
            if len(rows) != n or any(len(r) != n for r in rows):
                raise InvalidInputError(f"confusion matrix must be {n}x{n}")
            for r in rows:
                if any(p < 0 for p in r) or abs(math.fsum(r) - 1.0) > 1e-9:
                    raise InvalidInputError("confusion rows must be distributions summing to 1")
            object.__setattr__(self, "confusion", rows)


def predict_difficulty(model: DiscriminatorModel, true_difficulty: float, rng: np.random.Generator) -> float:
    if not (0.0 <= true_difficulty <= 1.0):
        raise InvalidInputError(f"difficulty {true_difficulty!r} outside [0, 1]")
    if model.confusion is not None:
        row = model.confusion[bucket_index(true_difficulty, model.granularity)]
        target = int(np.searchsorted(np.cumsum(row), rng.random(), side="right"))
        target = min(target, len(row) - 1)
        return (target + 0.5) * model.granularity
    if model.noise_sigma == 0.0:
        return true_difficulty
    return min(1.0, max(0.0, true_difficulty + rng.normal(0.0, model.noise_sigma)))


@dataclass(frozen=True)
class GpuModel:
    window_ms: float = 1000.0

    def __post_init__(self) -> None:
        if not self.window_ms > 0:
            raise InvalidInputError("window_ms must be positive")


@dataclass(frozen=True)
class WindowRecord:
    window_index: int
    arrivals: int
    survivors: int
    plan: EnhancementPlan
    busy_ms: float
    utilization: float
    gain: float
    deadline_missed: bool
    scheduler_seconds: float = field(default=0.0, compare=False)


@dataclass(frozen=True)
class Aggregates:
    windows: int
    total_arrivals: int
    total_survivors: int
    total_gain: float
    mean_gain_per_frame: float
    mean_utilization: float
    deadline_misses: int
    throughput: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "windows": self.windows,
            "total_arrivals": self.total_arrivals,
            "total_survivors": self.total_survivors,
            "total_gain": self.total_gain,
            "mean_gain_per_frame": self.mean_gain_per_frame,
            "mean_utilization": self.mean_utilization,
            "deadline_misses": self.deadline_misses,
            "throughput_fps": list(self.throughput),
        }


@dataclass(frozen=True)
class SimulationReport:
    records: tuple[WindowRecord, ...]
    window_ms: float
    scheduler: str
    aggregates: Aggregates = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "aggregates", aggregate(self))

    @property
    def scheduler_seconds(self) -> float:
        return math.fsum(r.scheduler_seconds for r in self.records)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in self.records:
            writer.writerow(
                [
                    r.window_index,
                    r.arrivals,
                    r.survivors,
                    repr(r.busy_ms),
                    repr(r.utilization),
                    repr(r.gain),
                    int(r.deadline_missed),
                ]
            )
        return buf.getvalue()

    def summary(self) -> dict:
        return {"scheduler": self.scheduler, "window_ms": self.window_ms, **self.aggregates.to_dict()}


def aggregate(report: SimulationReport) -> Aggregates:
    recs = report.records
    survivors = sum(r.survivors for r in recs)
    total_gain = math.fsum(r.gain for r in recs)
    return Aggregates(
        windows=len(recs),
        total_arrivals=sum(r.arrivals for r in recs),
        total_survivors=survivors,
        total_gain=total_gain,
        mean_gain_per_frame=total_gain / survivors if survivors else 0.0,
        mean_utilization=math.fsum(r.utilization for r in recs) / len(recs) if recs else 0.0,
        deadline_misses=sum(r.deadline_missed for r in recs),
        throughput=tuple(r.survivors * 1000.0 / report.window_ms for r in recs),
    )


def _frame_rng(seed: int, frame_id: int) -> np.random.Generator:
    # one stream per frame keeps estimates stable when other frames are removed
    return np.random.Generator(np.random.PCG64([seed, frame_id]))


def _solver(choice: str, oracle_limit: int) -> Callable[[GapInstance, Sequence[int]], EnhancementPlan]:
    if choice == "heuristic":
        return lambda inst, order: schedule_heuristic(inst)
    if choice == "oracle":
        return lambda inst, order: schedule_exact(inst, oracle_limit)
    if choice == "greedy_arrival":
        return schedule_greedy_arrival
    if choice == "none":
        return lambda inst, order: schedule_none(inst)
    raise InvalidInputError(f"unknown scheduler {choice!r}; pick one of {SCHEDULERS}")


def run_simulation(
    trace: Sequence[Frame],
    filter: FilterConfig | None,
    disc: DiscriminatorModel,
    latency: LatencyProfile,
    accuracy: AccuracyProfile,
    scheduler_choice: str = "heuristic",
    gpu: GpuModel = GpuModel(),
    seed: int = 0,
    oracle_limit: int = DEFAULT_ORACLE_LIMIT,
) -> SimulationReport:
    solve = _solver(scheduler_choice, oracle_limit)
    filter = filter or PassThrough()
    window_ms = gpu.window_ms
    if not trace:
        return SimulationReport((), window_ms, scheduler_choice)

    survivors = {f.id for f in filter.apply(trace)}
    # the discriminator is charged explicitly, so plans see detector + generator cost only
    plan_latency = latency.without_discriminator()
    mu_d = disc.latency_ms

    windows: dict[int, list[Frame]] = {}
    for f in trace:
        windows.setdefault(int(f.arrival_time_ms // window_ms), []).append(f)
    last = max(windows)

    records = []
    for w in range(last + 1):
        arrived = windows.get(w, [])
        kept = [f for f in arrived if f.id in survivors]
        m = len(kept)
        truth = {f.id: confidence_score(f.rois) for f in kept}
        gap_frames = tuple(
            GapFrame(
                f.id,
                predict_difficulty(disc, truth[f.id].difficulty, _frame_rng(seed, f.id)),
                truth[f.id].has_objects,
            )
            for f in kept
        )
        disc_ms = m * mu_d
        budget = window_ms - disc_ms
        t0 = time.perf_counter()
        if budget > 0:
            inst = GapInstance(gap_frames, plan_latency, accuracy, budget)
            plan = solve(inst, [f.id for f in kept])
        else:
            zero = {f.id: 0 for f in kept}
            cost = plan_cost(zero, plan_latency)
            plan = EnhancementPlan(zero, 0.0, cost, m == 0, 0)
        elapsed = time.perf_counter() - t0
        if not plan.feasible:
            # detection is mandatory; an over-budget window still runs unenhanced
            zero = {f.id: 0 for f in kept}
            plan = EnhancementPlan(zero, 0.0, plan_cost(zero, plan_latency), False, plan.downgrade_steps)
        busy = disc_ms + plan.total_latency_ms
        gain = 0.0
        for f in sorted(kept, key=lambda f: f.id):
            if truth[f.id].has_objects:
                gain = gain + accuracy.gain(truth[f.id].difficulty, plan.assignment[f.id])
        records.append(
            WindowRecord(
                window_index=w,
                arrivals=len(arrived),
                survivors=m,
                plan=plan,
                busy_ms=busy,
                utilization=min(1.0, busy / window_ms),
                gain=gain,
                deadline_missed=not plan.feasible,
                scheduler_seconds=elapsed,
            )
        )
    return SimulationReport(tuple(records), window_ms, scheduler_choice)


def thin_trace(trace: Sequence[Frame], keep_every: int = 2) -> list[Frame]:
    """Uniformly keep one frame out of every ``keep_every`` per camera."""
    seen: dict[int, int] = {}
    out = []
    for f in trace:
        i = seen.get(f.camera, 0)
        seen[f.camera] = i + 1
        if i % keep_every == 0:
            out.append(f)
    return out
