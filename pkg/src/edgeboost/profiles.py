"""Latency and accuracy profiles of the multi-exit enhancer.

The latency profile maps ``(kappa, batch size)`` to milliseconds and keeps
its additive components (discriminator, generator and detector cost). The
accuracy profile maps a difficulty bucket and exit level to the expected
accuracy gain in absolute points.
"""

from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import DEFAULT_GRANULARITY, InvalidInputError, bucket_count, bucket_index

PROFILED_BATCH_SIZES = (1, 2, 4, 8, 16, 32)
CONSISTENCY_TOL_MS = 1e-6


class ProfileError(InvalidInputError):
    """A profile violates one of its structural invariants."""


def _check_kappa(kappa: int, beta: int) -> int:
    kappa = int(getattr(kappa, "kappa", kappa))
    if not (0 <= kappa <= beta):
        raise InvalidInputError(f"kappa {kappa} outside [0, {beta}]")
    return kappa


@dataclass(frozen=True)
class LatencyProfile:
    """Per-exit latency components plus the profiled batch grid.

    ``batch_grid`` maps ``(kappa, n)`` to the measured latency of one
    batch of ``n`` frames at exit ``kappa``. Every exit must carry an
    ``n = 1`` entry equal to ``mu_d_ms + epsilon_ms[k] + nu_ms[k]``.
    """

    mu_d_ms: float
    epsilon_ms: tuple[float, ...]
    nu_ms: tuple[float, ...]
    batch_grid: Mapping[tuple[int, int], float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "epsilon_ms", tuple(float(x) for x in self.epsilon_ms))
        object.__setattr__(self, "nu_ms", tuple(float(x) for x in self.nu_ms))
        grid = {(int(k), int(n)): float(v) for (k, n), v in sorted(self.batch_grid.items())}
        object.__setattr__(self, "batch_grid", grid)
        self._validate()
        sizes = {}
        for k, n in grid:
            sizes.setdefault(k, []).append(n)
        object.__setattr__(self, "_sizes", {k: sorted(v) for k, v in sizes.items()})

    @property
    def beta(self) -> int:
        return len(self.epsilon_ms) - 1

    def _validate(self) -> None:
        eps, nu = self.epsilon_ms, self.nu_ms
        if len(eps) < 2 or len(eps) != len(nu):
            raise ProfileError("epsilon_ms and nu_ms need matching length beta + 1 >= 2")
        if not math.isfinite(self.mu_d_ms) or self.mu_d_ms < 0:
            raise ProfileError("mu_d_ms must be a non-negative number")
        if any(x < 0 or not math.isfinite(x) for x in eps + nu):
            raise ProfileError("latency components must be non-negative numbers")
        if eps[0] != 0.0:
            raise ProfileError("epsilon_ms[0] must be 0: no generator runs at kappa 0")
        if any(b < a for a, b in zip(eps, eps[1:])):
            raise ProfileError("epsilon_ms must be non-decreasing in kappa")
        if any(b > a for a, b in zip(nu, nu[1:])):
            raise ProfileError("nu_ms must be non-increasing in kappa")
        for (k, n), ms in self.batch_grid.items():
            if not (0 <= k <= self.beta) or n < 1:
                raise ProfileError(f"batch grid cell ({k}, {n}) out of range")
            if ms < 0 or not math.isfinite(ms):
                raise ProfileError(f"batch grid cell ({k}, {n}) has invalid latency {ms!r}")
        for k in range(self.beta + 1):
            if (k, 1) not in self.batch_grid:
                raise ProfileError(f"batch grid is missing the single-frame cell for kappa {k}")
            expected = self.mu_d_ms + eps[k] + nu[k]
            if abs(self.batch_grid[(k, 1)] - expected) > CONSISTENCY_TOL_MS:
                raise ProfileError(
                    f"kappa {k}: grid latency {self.batch_grid[(k, 1)]} ms disagrees with "
                    f"components {expected} ms"
                )
            row = sorted((n, ms) for (kk, n), ms in self.batch_grid.items() if kk == k)
            for (n0, t0), (n1, t1) in zip(row, row[1:]):
                if t1 < t0:
                    raise ProfileError(f"kappa {k}: batch latency decreases from n={n0} to n={n1}")
                if t1 / n1 > t0 / n0 + 1e-12:
                    raise ProfileError(f"kappa {k}: per-frame latency grows from n={n0} to n={n1}")

    def single(self, kappa: int) -> float:
        k = _check_kappa(kappa, self.beta)
        return self.mu_d_ms + self.epsilon_ms[k] + self.nu_ms[k]

    def batch(self, kappa: int, n: int) -> float:
        k = _check_kappa(kappa, self.beta)
        if n < 1:
            raise InvalidInputError(f"batch size must be >= 1, got {n}")
        sizes = self._sizes[k]
        grid = self.batch_grid
        if n > sizes[-1]:
            n_max = sizes[-1]
            value = grid[(k, n_max)] * n / n_max
        else:
            value = grid[(k, sizes[bisect.bisect_left(sizes, n)])]
        # running n single-frame batches is always possible, so never quote more
        return min(value, n * grid[(k, 1)])

    def batch_table(self, kappa: int, max_n: int) -> list[float]:
        """``[0.0, batch(kappa, 1), ..., batch(kappa, max_n)]`` computed in bulk.

        Values are bitwise identical to :meth:`batch`.
        """
        k = _check_kappa(kappa, self.beta)
        sizes = np.asarray(self._sizes[k])
        values = np.asarray([self.batch_grid[(k, int(s))] for s in sizes])
        ns = np.arange(max_n + 1, dtype=np.int64)
        idx = np.minimum(np.searchsorted(sizes, ns, side="left"), len(sizes) - 1)
        out = values[idx]
        above = ns > sizes[-1]
        out = np.where(above, values[-1] * ns / sizes[-1], out)
        out = np.minimum(out, ns * self.batch_grid[(k, 1)])
        out[0] = 0.0
        return out.tolist()

    def without_discriminator(self) -> "LatencyProfile":
        """Copy with the per-frame discriminator cost removed from every cell."""
        grid = {(k, n): ms - n * self.mu_d_ms for (k, n), ms in self.batch_grid.items()}
        for k in range(self.beta + 1):
            grid[(k, 1)] = self.epsilon_ms[k] + self.nu_ms[k]
        return LatencyProfile(0.0, self.epsilon_ms, self.nu_ms, grid)


@dataclass(frozen=True)
class AccuracyProfile:
    """Expected gain table ``gains[bucket][kappa]`` in accuracy points."""

    gains: tuple[tuple[float, ...], ...]
    granularity: float = DEFAULT_GRANULARITY

    def __post_init__(self) -> None:
        rows = tuple(tuple(float(g) for g in row) for row in self.gains)
        object.__setattr__(self, "gains", rows)
        count = bucket_count(self.granularity)
        if len(rows) != count:
            raise ProfileError(f"expected {count} buckets for granularity {self.granularity}, got {len(rows)}")
        widths = {len(r) for r in rows}
        if len(widths) != 1 or widths.pop() < 2:
            raise ProfileError("every bucket needs the same number (beta + 1 >= 2) of exit gains")
        for b, row in enumerate(rows):
            if row[0] != 0.0:
                raise ProfileError(f"bucket {b}: gain at kappa 0 must be 0, got {row[0]}")
            if not all(math.isfinite(g) for g in row):
                raise ProfileError(f"bucket {b}: non-finite gain")

    @property
    def beta(self) -> int:
        return len(self.gains[0]) - 1

    @property
    def n_buckets(self) -> int:
        return len(self.gains)

    def gain(self, difficulty: float, kappa: int) -> float:
        k = _check_kappa(kappa, self.beta)
        return self.gains[bucket_index(difficulty, self.granularity)][k]

    def is_monotone(self) -> bool:
        return all(b >= a for row in self.gains for a, b in zip(row, row[1:]))


@dataclass(frozen=True)
class ProfileSample:
    difficulty: float
    kappa: int
    gain: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.difficulty <= 1.0):
            raise InvalidInputError(f"difficulty {self.difficulty!r} outside [0, 1]")
        if self.kappa < 0:
            raise InvalidInputError("kappa must be non-negative")


def latency_single(profile: LatencyProfile, kappa: int) -> float:
    return profile.single(kappa)


def latency_batch(profile: LatencyProfile, kappa: int, n: int) -> float:
    """Latency of one batch of ``n`` frames at exit ``kappa``.

    Sizes between profiled points round up to the next profiled size;
    sizes past the largest scale it linearly. The result is capped at
    ``n`` times the single-frame latency.
    """
    return profile.batch(kappa, n)


def accuracy_gain(profile: AccuracyProfile, difficulty: float, kappa: int) -> float:
    return profile.gain(difficulty, kappa)


def enforce_monotone(profile: AccuracyProfile) -> AccuracyProfile:
    rows = []
    for row in profile.gains:
        best = 0.0
        out = [0.0]
        for g in row[1:]:
            best = max(best, g)
            out.append(best)
        rows.append(tuple(out))
    return AccuracyProfile(tuple(rows), profile.granularity)


def build_accuracy_profile(
    samples: Iterable[ProfileSample],
    granularity: float = DEFAULT_GRANULARITY,
    beta: int = 5,
) -> AccuracyProfile:
    """Average raw gain samples per (bucket, kappa) cell.

    Empty cells borrow the nearest populated bucket of the same exit,
    preferring the harder side on ties. A column with no samples at all
    stays zero, as does the kappa-0 column.
    """
    n_buckets = bucket_count(granularity)
    if beta < 1:
        raise InvalidInputError("beta must be positive")
    cells: dict[tuple[int, int], list[float]] = {}
    for s in samples:
        if s.kappa > beta:
            raise InvalidInputError(f"sample kappa {s.kappa} exceeds beta {beta}")
        cells.setdefault((bucket_index(s.difficulty, granularity), s.kappa), []).append(s.gain)

    table = [[0.0] * (beta + 1) for _ in range(n_buckets)]
    for k in range(1, beta + 1):
        filled = {b: math.fsum(v) / len(v) for (b, kk), v in cells.items() if kk == k}
        if not filled:
            continue
        for b in range(n_buckets):
            if b in filled:
                table[b][k] = filled[b]
            else:
                nearest = min(filled, key=lambda src: (abs(src - b), -src))
                table[b][k] = filled[nearest]
    return AccuracyProfile(tuple(tuple(r) for r in table), granularity)


def build_latency_profile(
    grid_runs: Mapping[tuple[int, int], Sequence[float]],
    mu_d_runs: Sequence[float],
    epsilon_runs: Sequence[Sequence[float]],
    nu_runs: Sequence[Sequence[float]],
) -> LatencyProfile:
    """Average repeated timing runs into a validated :class:`LatencyProfile`."""

    def mean(runs: Sequence[float], what: str) -> float:
        if len(runs) == 0:
            raise ProfileError(f"no measurements for {what}")
        return math.fsum(runs) / len(runs)

    mu = mean(mu_d_runs, "discriminator")
    eps = tuple(mean(r, f"generator kappa {k}") for k, r in enumerate(epsilon_runs))
    nu = tuple(mean(r, f"detector kappa {k}") for k, r in enumerate(nu_runs))
    grid = {cell: mean(runs, f"grid cell {cell}") for cell, runs in grid_runs.items()}
    return LatencyProfile(mu, eps, nu, grid)


# -- serialization ---------------------------------------------------------


def profiles_to_dict(latency: LatencyProfile, accuracy: AccuracyProfile) -> dict:
    if latency.beta != accuracy.beta:
        raise ProfileError(f"latency beta {latency.beta} != accuracy beta {accuracy.beta}")
    return {
        "beta": latency.beta,
        "latency": {
            "mu_d_ms": latency.mu_d_ms,
            "epsilon_ms": list(latency.epsilon_ms),
            "nu_ms": list(latency.nu_ms),
            "batch_grid": [
                {"kappa": k, "n": n, "ms": ms} for (k, n), ms in sorted(latency.batch_grid.items())
            ],
        },
        "accuracy": {
            "granularity": accuracy.granularity,
            "gains": [list(row) for row in accuracy.gains],
        },
    }


def profiles_from_dict(doc: Mapping) -> tuple[LatencyProfile, AccuracyProfile]:
    try:
        beta = int(doc["beta"])
        lat = doc["latency"]
        acc = doc["accuracy"]
        latency = LatencyProfile(
            mu_d_ms=float(lat["mu_d_ms"]),
            epsilon_ms=tuple(lat["epsilon_ms"]),
            nu_ms=tuple(lat["nu_ms"]),
            batch_grid={(int(c["kappa"]), int(c["n"])): float(c["ms"]) for c in lat["batch_grid"]},
        )
        accuracy = AccuracyProfile(
            tuple(tuple(row) for row in acc["gains"]), float(acc["granularity"])
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise ProfileError(f"malformed profile document: {exc!r}") from exc
    if latency.beta != beta or accuracy.beta != beta:
        raise ProfileError(
            f"document beta {beta} disagrees with latency ({latency.beta}) / accuracy ({accuracy.beta})"
        )
    return latency, accuracy


def serialize_profiles(latency: LatencyProfile, accuracy: AccuracyProfile) -> str:
    return json.dumps(profiles_to_dict(latency, accuracy), indent=2) + "\n"


def deserialize_profiles(document: str) -> tuple[LatencyProfile, AccuracyProfile]:
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise ProfileError(f"profile document is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ProfileError("profile document must be a JSON object")
    return profiles_from_dict(doc)
