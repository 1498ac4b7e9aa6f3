"""Enhancement-level assignment under a batched latency budget.

Every frame in a window gets an exit level kappa in ``[0, beta]``. Frames
that share a level run as one batch, so the cost of a plan is the sum of
one batch latency per distinct level. Two solvers are provided: the
prune-and-search heuristic (start everything at the deepest exit and
repeatedly step back the frame whose last level buys the least accuracy)
and an exhaustive enumeration used as a correctness oracle.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .core import InvalidInputError, bucket_index
from .profiles import AccuracyProfile, LatencyProfile, ProfileError

DEFAULT_ORACLE_LIMIT = 10**7
_ORACLE_CHUNK = 1 << 16


class OracleCapExceeded(RuntimeError):
    """The exhaustive search space is larger than the configured cap."""


class GapFrame(NamedTuple):
    id: int
    difficulty: float
    # frames without objects are pinned to kappa 0
    enhanceable: bool = True


@dataclass(frozen=True)
class GapInstance:
    frames: tuple[GapFrame, ...]
    latency: LatencyProfile
    accuracy: AccuracyProfile
    budget_ms: float

    def __post_init__(self) -> None:
        frames = tuple(
            f if isinstance(f, GapFrame) else GapFrame(*f) for f in self.frames
        )
        frames = tuple(sorted(frames, key=lambda f: f.id))
        ids = [f.id for f in frames]
        if len(set(ids)) != len(ids):
            raise InvalidInputError("frame ids must be unique")
        for f in frames:
            if not (0.0 <= f.difficulty <= 1.0):
                raise InvalidInputError(f"frame {f.id}: difficulty {f.difficulty!r} outside [0, 1]")
        object.__setattr__(self, "frames", frames)
        if not self.budget_ms > 0:
            raise InvalidInputError(f"budget_ms must be positive, got {self.budget_ms!r}")
        if self.latency.beta != self.accuracy.beta:
            raise ProfileError("latency and accuracy profiles disagree on beta")
        if not self.accuracy.is_monotone():
            raise ProfileError("accuracy profile must be monotone in kappa (see enforce_monotone)")

    @property
    def beta(self) -> int:
        return self.latency.beta

    def bucket_of(self, frame: GapFrame) -> int:
        return bucket_index(frame.difficulty, self.accuracy.granularity)


@dataclass(frozen=True)
class EnhancementPlan:
    assignment: Mapping[int, int]
    total_gain: float
    total_latency_ms: float
    feasible: bool
    downgrade_steps: int = 0

    def levels(self) -> list[int]:
        """Exit levels in ascending frame-id order."""
        return [self.assignment[i] for i in sorted(self.assignment)]

    def to_dict(self) -> dict:
        return {
            "assignment": [{"id": i, "kappa": k} for i, k in sorted(self.assignment.items())],
            "total_gain": self.total_gain,
            "total_latency_ms": self.total_latency_ms,
            "feasible": self.feasible,
            "downgrade_steps": self.downgrade_steps,
        }


def plan_cost(assignment: Mapping[int, int], latency: LatencyProfile) -> float:
    counts = [0] * (latency.beta + 1)
    for k in assignment.values():
        counts[k] += 1
    return _cost_of_counts(counts, latency)


def _cost_of_counts(counts: Sequence[int], latency: LatencyProfile) -> float:
    # ascending-level sequential sum; the oracle's vectorized path mirrors this order
    cost = 0.0
    for k, c in enumerate(counts):
        if c:
            cost = cost + latency.batch(k, c)
    return cost


def plan_gain(instance: GapInstance, assignment: Mapping[int, int]) -> float:
    ids = {f.id for f in instance.frames}
    if set(assignment) != ids:
        missing = sorted(ids - set(assignment))
        extra = sorted(set(assignment) - ids)
        raise InvalidInputError(f"assignment mismatch: missing {missing}, extra {extra}")
    total = 0.0
    for f in instance.frames:
        total = total + instance.accuracy.gain(f.difficulty, assignment[f.id])
    return total


def marginal_gain(instance: GapInstance, frame: GapFrame, kappa: int) -> float:
    if kappa < 1 or kappa > instance.beta:
        raise InvalidInputError(f"marginal gain needs kappa in [1, {instance.beta}], got {kappa}")
    row = instance.accuracy.gains[instance.bucket_of(frame)]
    return row[kappa] - row[kappa - 1]


def _finish(instance: GapInstance, assignment: dict[int, int], steps: int) -> EnhancementPlan:
    cost = plan_cost(assignment, instance.latency)
    return EnhancementPlan(
        assignment=assignment,
        total_gain=plan_gain(instance, assignment),
        total_latency_ms=cost,
        feasible=cost <= instance.budget_ms,
        downgrade_steps=steps,
    )


def schedule_heuristic(instance: GapInstance) -> EnhancementPlan:
    """Prune-and-search: start at the deepest exit, step back cheapest frames.

    Each step lowers by one level the frame whose current level adds the
    least expected gain. Ties go to the step that frees more single-frame
    latency, then to the smaller frame id. The loop stops as soon as the
    batched plan cost fits the budget or nothing is left to lower.
    """
    frames = instance.frames
    m, beta = len(frames), instance.beta
    lat = instance.latency
    if m == 0:
        return EnhancementPlan({}, 0.0, 0.0, True, 0)

    # The pop order never depends on the cost, so every (bucket, kappa) pair
    # gets an integer rank and the heap holds rank * m + position.
    gains = instance.accuracy.gains
    buckets = [instance.bucket_of(f) for f in frames]
    single = [lat.batch(k, 1) for k in range(beta + 1)]
    used = sorted(set(buckets))
    keys = sorted(
        {(gains[b][k] - gains[b][k - 1], -(single[k] - single[k - 1])) for b in used for k in range(1, beta + 1)}
    )
    rank_of_key = {key: r for r, key in enumerate(keys)}
    rank = {
        (b, k): rank_of_key[(gains[b][k] - gains[b][k - 1], -(single[k] - single[k - 1]))]
        for b in used
        for k in range(1, beta + 1)
    }

    levels = [beta if f.enhanceable else 0 for f in frames]
    counts = [0] * (beta + 1)
    for k in levels:
        counts[k] += 1
    tables = [lat.batch_table(k, m) for k in range(beta + 1)]

    def exact_cost() -> float:
        cost = 0.0
        for k, c in enumerate(counts):
            if c:
                cost = cost + tables[k][c]
        return cost

    heap = [rank[(buckets[i], beta)] * m + i for i in range(m) if levels[i] > 0]
    heapq.heapify(heap)
    budget = instance.budget_ms
    cost = exact_cost()
    steps = 0
    while cost > budget and heap:
        i = heap[0] % m
        k = levels[i]
        new = k - 1
        levels[i] = new
        if new > 0:
            heapq.heapreplace(heap, rank[(buckets[i], new)] * m + i)
        else:
            heapq.heappop(heap)
        ck, cn = counts[k], counts[new]
        cost += (tables[k][ck - 1] - tables[k][ck]) + (tables[new][cn + 1] - tables[new][cn])
        counts[k] = ck - 1
        counts[new] = cn + 1
        steps += 1
        if cost <= budget + 1e-6:
            # the running sum may drift by a few ulps; decide on the exact sum
            cost = exact_cost()
    assignment = {f.id: levels[i] for i, f in enumerate(frames)}
    return _finish(instance, assignment, steps)


def schedule_exact(instance: GapInstance, limit: int = DEFAULT_ORACLE_LIMIT) -> EnhancementPlan:
    """Exhaustive search over every level assignment.

    Returns the feasible plan of maximal gain; ties prefer lower cost and
    then the lexicographically smallest level vector in frame-id order.
    If nothing fits, the all-zero plan comes back flagged infeasible.
    """
    frames = instance.frames
    m, beta = len(frames), instance.beta
    if m == 0:
        return EnhancementPlan({}, 0.0, 0.0, True, 0)
    radix = [beta + 1 if f.enhanceable else 1 for f in frames]
    space = math.prod(radix)
    if (beta + 1) ** sum(f.enhanceable for f in frames) > limit:
        raise OracleCapExceeded(f"search space {space} exceeds limit {limit}")

    lat = instance.latency
    tables = np.asarray([lat.batch_table(k, m) for k in range(beta + 1)])
    frame_gains = np.asarray(
        [instance.accuracy.gains[instance.bucket_of(f)] for f in frames]
    )
    # mixed-radix digits with frame 0 most significant => enumeration order is lexicographic
    weights = np.ones(m, dtype=np.int64)
    for j in range(m - 2, -1, -1):
        weights[j] = weights[j + 1] * radix[j + 1]

    best: tuple[float, float, int] | None = None
    for start in range(0, space, _ORACLE_CHUNK):
        idx = np.arange(start, min(space, start + _ORACLE_CHUNK), dtype=np.int64)
        digits = (idx[:, None] // weights[None, :]) % np.asarray(radix)[None, :]
        gain = np.zeros(len(idx))
        for j in range(m):
            gain = gain + frame_gains[j, digits[:, j]]
        cost = np.zeros(len(idx))
        for k in range(beta + 1):
            counts = (digits == k).sum(axis=1)
            cost = cost + np.where(counts > 0, tables[k, counts], 0.0)
        ok = cost <= instance.budget_ms
        if not ok.any():
            continue
        g = np.where(ok, gain, -np.inf)
        top = g.max()
        c = np.where(g == top, cost, np.inf)
        low = c.min()
        pos = int(np.flatnonzero((g == top) & (c == low))[0])
        cand = (float(top), float(low), int(idx[pos]))
        if best is None or cand[0] > best[0] or (cand[0] == best[0] and cand[1] < best[1]):
            best = cand

    if best is None:
        assignment = {f.id: 0 for f in frames}
    else:
        code = best[2]
        assignment = {f.id: int((code // int(weights[j])) % radix[j]) for j, f in enumerate(frames)}
    return _finish(instance, assignment, 0)


def schedule_greedy_arrival(instance: GapInstance, order: Sequence[int] | None = None) -> EnhancementPlan:
    """Naive harvesting baseline: deepest exit in arrival order until the budget runs out."""
    frames = instance.frames
    beta = instance.beta
    assignment = {f.id: 0 for f in frames}
    by_id = {f.id: f for f in frames}
    for fid in order if order is not None else [f.id for f in frames]:
        if not by_id[fid].enhanceable:
            continue
        assignment[fid] = beta
        if plan_cost(assignment, instance.latency) > instance.budget_ms:
            assignment[fid] = 0
            break
    return _finish(instance, assignment, 0)


def schedule_none(instance: GapInstance) -> EnhancementPlan:
    return _finish(instance, {f.id: 0 for f in instance.frames}, 0)


@dataclass(frozen=True)
class GapReport:
    heuristic_gain: float
    oracle_gain: float
    relative_gap: float
    heuristic_seconds: float
    oracle_seconds: float
    heuristic: EnhancementPlan = field(repr=False)
    oracle: EnhancementPlan = field(repr=False)


def compare_schedulers(instance: GapInstance, limit: int = DEFAULT_ORACLE_LIMIT) -> GapReport:
    t0 = time.perf_counter()
    heur = schedule_heuristic(instance)
    t1 = time.perf_counter()
    best = schedule_exact(instance, limit)
    t2 = time.perf_counter()
    gap = (best.total_gain - heur.total_gain) / max(best.total_gain, 1e-12)
    return GapReport(heur.total_gain, best.total_gain, gap, t1 - t0, t2 - t1, heur, best)


# -- instance documents ----------------------------------------------------


def instance_from_dict(doc: Mapping, latency: LatencyProfile, accuracy: AccuracyProfile) -> GapInstance:
    try:
        frames = tuple(
            GapFrame(int(f["id"]), float(f["predicted_difficulty"]), bool(f.get("enhanceable", True)))
            for f in doc["frames"]
        )
        budget = float(doc["budget_ms"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed instance document: {exc!r}") from exc
    return GapInstance(frames, latency, accuracy, budget)


def instance_to_dict(instance: GapInstance) -> dict:
    from .profiles import profiles_to_dict

    return {
        "budget_ms": instance.budget_ms,
        "frames": [
            {"id": f.id, "predicted_difficulty": f.difficulty}
            | ({} if f.enhanceable else {"enhanceable": False})
            for f in instance.frames
        ],
        "profiles": profiles_to_dict(instance.latency, instance.accuracy),
    }
