"""Synthetic camera traces and the frame filters of cascaded video pipelines.

Traces are generated from a seeded ``numpy`` PCG64 generator. The root
``SeedSequence(seed)`` is split with ``spawn(cameras)`` so camera ``c``
always draws from child stream ``c``: adding cameras never perturbs the
frames of existing ones.

Three filters decide which frames reach the GPU:

* ``temporal_diff_filter`` keeps a frame when its content signature moved
  more than a threshold away from the last frame kept on the same camera.
* ``cheap_model_filter`` keeps frames where a lightweight detector counts
  at least ``min_objects`` objects.
* ``cascade_filter`` applies the temporal rule and then keeps only frames
  the cheap model is unsure about.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import Frame, InvalidInputError, RoiDetection


@dataclass(frozen=True)
class ConstantRate:
    kind: str = field(default="constant", init=False)

    def intensity(self, t_s: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return np.ones_like(t_s)


@dataclass(frozen=True)
class SinusoidalRate:
    """Fraction of camera frames emitted swings between 1 and ``1 - amplitude``."""

    period_s: float = 60.0
    amplitude: float = 0.5
    kind: str = field(default="sinusoidal", init=False)

    def __post_init__(self) -> None:
        if self.period_s <= 0 or not (0.0 <= self.amplitude <= 1.0):
            raise InvalidInputError("sinusoidal rate needs period_s > 0 and amplitude in [0, 1]")

    def intensity(self, t_s: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return 1.0 - self.amplitude * (1.0 - np.cos(2.0 * np.pi * t_s / self.period_s)) / 2.0


@dataclass(frozen=True)
class BurstyRate:
    """Frames pass at ``base_rate`` except inside bursts of ``burst_len`` slots."""

    burst_prob: float = 0.02
    burst_len: int = 50
    base_rate: float = 0.3
    kind: str = field(default="bursty", init=False)

    def __post_init__(self) -> None:
        if not (0.0 <= self.burst_prob <= 1.0 and 0.0 <= self.base_rate <= 1.0):
            raise InvalidInputError("bursty rate probabilities must lie in [0, 1]")
        if self.burst_len < 1:
            raise InvalidInputError("burst_len must be >= 1")

    def intensity(self, t_s: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        starts = rng.random(len(t_s)) < self.burst_prob
        out = np.full(len(t_s), self.base_rate)
        for i in np.flatnonzero(starts):
            out[i : i + self.burst_len] = 1.0
        return out


RateProcess = ConstantRate | SinusoidalRate | BurstyRate


@dataclass(frozen=True)
class MixComponent:
    """Uniform band of mean RoI confidence drawn with relative ``weight``."""

    weight: float
    theta_low: float
    theta_high: float

    def __post_init__(self) -> None:
        if self.weight < 0 or not (0.0 <= self.theta_low <= self.theta_high <= 1.0):
            raise InvalidInputError(f"bad mixture component {self}")


DEFAULT_MIX = (
    MixComponent(0.70, 0.75, 1.0),
    MixComponent(0.18, 0.55, 0.75),
    MixComponent(0.12, 0.05, 0.55),
)


@dataclass(frozen=True)
class TraceConfig:
    duration_s: float = 10.0
    fps: float = 25.0
    cameras: int = 1
    rate_process: RateProcess = field(default_factory=ConstantRate)
    difficulty_mix: tuple[MixComponent, ...] = DEFAULT_MIX
    mean_objects: float = 4.0
    roi_spread: float = 0.3
    content_drift: float = 0.02
    scene_change_prob: float = 0.05
    cheap_correlation: float = 0.8
    seed: int = 0

    def __post_init__(self) -> None:
        if not (self.fps > 0 and math.isfinite(self.fps)):
            raise InvalidInputError(f"fps must be positive, got {self.fps!r}")
        if self.duration_s < 0:
            raise InvalidInputError("duration_s must be non-negative")
        if self.cameras < 1:
            raise InvalidInputError(f"cameras must be >= 1, got {self.cameras}")
        if not self.difficulty_mix or sum(c.weight for c in self.difficulty_mix) <= 0:
            raise InvalidInputError("difficulty_mix needs positive total weight")
        for name in ("roi_spread", "scene_change_prob", "cheap_correlation"):
            if not (0.0 <= getattr(self, name) <= 1.0):
                raise InvalidInputError(f"{name} must lie in [0, 1]")
        if self.mean_objects < 0 or self.content_drift < 0:
            raise InvalidInputError("mean_objects and content_drift must be non-negative")

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["difficulty_mix"] = [asdict(c) for c in self.difficulty_mix]
        return doc

    @classmethod
    def from_dict(cls, doc: dict) -> "TraceConfig":
        doc = dict(doc)
        rate = dict(doc.pop("rate_process", {"kind": "constant"}))
        kind = rate.pop("kind", "constant")
        rates = {"constant": ConstantRate, "sinusoidal": SinusoidalRate, "bursty": BurstyRate}
        if kind not in rates:
            raise InvalidInputError(f"unknown rate process {kind!r}")
        mix = doc.pop("difficulty_mix", None)
        kwargs = {}
        if mix is not None:
            kwargs["difficulty_mix"] = tuple(MixComponent(**c) for c in mix)
        try:
            return cls(rate_process=rates[kind](**rate), **kwargs, **doc)
        except TypeError as exc:
            raise InvalidInputError(f"bad trace config: {exc}") from exc


def _camera_frames(config: TraceConfig, camera: int, rng: np.random.Generator) -> list[tuple]:
    n_slots = int(math.floor(config.duration_s * config.fps + 1e-9))
    period_ms = 1000.0 / config.fps
    times_ms = np.arange(n_slots) * period_ms
    keep = rng.random(n_slots) < config.rate_process.intensity(times_ms / 1000.0, rng)

    weights = np.asarray([c.weight for c in config.difficulty_mix], dtype=float)
    comp = rng.choice(len(weights), size=n_slots, p=weights / weights.sum())
    lows = np.asarray([c.theta_low for c in config.difficulty_mix])[comp]
    highs = np.asarray([c.theta_high for c in config.difficulty_mix])[comp]
    target = lows + (highs - lows) * rng.random(n_slots)
    n_obj = rng.poisson(config.mean_objects, size=n_slots)

    steps = rng.normal(0.0, config.content_drift, size=n_slots)
    jumps = rng.random(n_slots) < config.scene_change_prob
    jump_to = rng.random(n_slots)
    signature = np.empty(n_slots)
    s = rng.random()
    for i in range(n_slots):
        s = jump_to[i] if jumps[i] else min(1.0, max(0.0, s + steps[i]))
        signature[i] = s

    corr = config.cheap_correlation
    trust = rng.random(n_slots) < corr
    noise_count = rng.poisson(config.mean_objects, size=n_slots)
    noise_conf = rng.random(n_slots)

    out = []
    for i in np.flatnonzero(keep):
        spread = config.roi_spread * min(target[i], 1.0 - target[i])
        confs = np.clip(target[i] + spread * rng.standard_normal(n_obj[i]), 0.0, 1.0)
        theta = float(confs.mean()) if len(confs) else 1.0
        cheap_count = int(n_obj[i] if trust[i] else noise_count[i])
        cheap_conf = float(min(1.0, max(0.0, corr * theta + (1.0 - corr) * noise_conf[i])))
        out.append(
            (
                float(times_ms[i]),
                camera,
                tuple(float(c) for c in confs),
                float(signature[i]),
                cheap_count,
                cheap_conf,
            )
        )
    return out


def generate_trace(config: TraceConfig) -> list[Frame]:
    children = np.random.SeedSequence(config.seed).spawn(config.cameras)
    rows = []
    for cam, child in enumerate(children):
        rows.extend(_camera_frames(config, cam, np.random.Generator(np.random.PCG64(child))))
    rows.sort(key=lambda r: (r[0], r[1]))
    return [
        Frame(
            id=i,
            arrival_time_ms=t,
            rois=tuple(RoiDetection(c) for c in confs),
            content_signature=sig,
            cheap_object_count=count,
            cheap_confidence=conf,
            camera=cam,
        )
        for i, (t, cam, confs, sig, count, conf) in enumerate(rows)
    ]


# -- filters ---------------------------------------------------------------


@dataclass(frozen=True)
class TemporalFilter:
    diff_threshold: float = 0.05
    name: str = field(default="glimpse", init=False)

    def __post_init__(self) -> None:
        if not (0.0 <= self.diff_threshold <= 1.0):
            raise InvalidInputError("diff_threshold must lie in [0, 1]")

    def apply(self, frames: Sequence[Frame]) -> list[Frame]:
        return temporal_diff_filter(frames, self.diff_threshold)


@dataclass(frozen=True)
class CheapModelFilter:
    min_objects: int = 1
    name: str = field(default="vigil", init=False)

    def __post_init__(self) -> None:
        if self.min_objects < 0:
            raise InvalidInputError("min_objects must be non-negative")

    def apply(self, frames: Sequence[Frame]) -> list[Frame]:
        return cheap_model_filter(frames, self.min_objects)


@dataclass(frozen=True)
class CascadeFilter:
    diff_threshold: float = 0.05
    conf_threshold: float = 0.8
    name: str = field(default="noscope", init=False)

    def __post_init__(self) -> None:
        if not (0.0 <= self.diff_threshold <= 1.0 and 0.0 <= self.conf_threshold <= 1.0):
            raise InvalidInputError("cascade thresholds must lie in [0, 1]")

    def apply(self, frames: Sequence[Frame]) -> list[Frame]:
        return cascade_filter(frames, self.diff_threshold, self.conf_threshold)


@dataclass(frozen=True)
class PassThrough:
    name: str = field(default="none", init=False)

    def apply(self, frames: Sequence[Frame]) -> list[Frame]:
        return list(frames)


FilterConfig = TemporalFilter | CheapModelFilter | CascadeFilter | PassThrough


def _temporal_mask(frames: Sequence[Frame], diff_threshold: float) -> list[bool]:
    last: dict[int, float] = {}
    mask = []
    for f in frames:
        prev = last.get(f.camera)
        keep = prev is None or abs(f.content_signature - prev) > diff_threshold
        if keep:
            last[f.camera] = f.content_signature
        mask.append(keep)
    return mask


def temporal_diff_filter(frames: Sequence[Frame], diff_threshold: float) -> list[Frame]:
    return [f for f, keep in zip(frames, _temporal_mask(frames, diff_threshold)) if keep]


def cheap_model_filter(frames: Sequence[Frame], min_objects: int = 1) -> list[Frame]:
    return [f for f in frames if f.cheap_object_count >= min_objects]


def cascade_filter(frames: Sequence[Frame], diff_threshold: float, conf_threshold: float) -> list[Frame]:
    # the cheap DNN only sees frames the difference detector let through
    mask = _temporal_mask(frames, diff_threshold)
    return [f for f, keep in zip(frames, mask) if keep and f.cheap_confidence < conf_threshold]


def make_filter(name: str, **params) -> FilterConfig:
    table = {
        "glimpse": TemporalFilter,
        "temporal": TemporalFilter,
        "vigil": CheapModelFilter,
        "cheap": CheapModelFilter,
        "noscope": CascadeFilter,
        "cascade": CascadeFilter,
        "none": PassThrough,
    }
    if name not in table:
        raise InvalidInputError(f"unknown filter {name!r}")
    cls = table[name]
    accepted = {k: v for k, v in params.items() if v is not None and k in cls.__dataclass_fields__ and k != "name"}
    return cls(**accepted)


# -- trace files -----------------------------------------------------------


def frame_to_record(f: Frame) -> dict:
    return {
        "id": f.id,
        "arrival_time_ms": f.arrival_time_ms,
        "roi_confidences": [r.confidence for r in f.rois],
        "content_signature": f.content_signature,
        "cheap_object_count": f.cheap_object_count,
        "cheap_confidence": f.cheap_confidence,
        "camera": f.camera,
    }


def frame_from_record(rec: dict) -> Frame:
    try:
        return Frame(
            id=int(rec["id"]),
            arrival_time_ms=float(rec["arrival_time_ms"]),
            rois=tuple(RoiDetection(float(c)) for c in rec["roi_confidences"]),
            content_signature=float(rec["content_signature"]),
            cheap_object_count=int(rec["cheap_object_count"]),
            cheap_confidence=float(rec["cheap_confidence"]),
            camera=int(rec.get("camera", 0)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidInputError):
            raise
        raise InvalidInputError(f"malformed trace record: {exc!r}") from exc


def validate_trace(frames: Sequence[Frame]) -> None:
    seen = set()
    last_t = -math.inf
    for f in frames:
        if f.id in seen:
            raise InvalidInputError(f"duplicate frame id {f.id}")
        if f.arrival_time_ms < last_t:
            raise InvalidInputError(f"frame {f.id} arrives before its predecessor")
        seen.add(f.id)
        last_t = f.arrival_time_ms


def dumps_trace(frames: Iterable[Frame]) -> str:
    return "".join(json.dumps(frame_to_record(f)) + "\n" for f in frames)


def loads_trace(text: str) -> list[Frame]:
    frames = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"trace line {lineno}: {exc}") from exc
        frames.append(frame_from_record(rec))
    validate_trace(frames)
    return frames


def write_trace(path: str | os.PathLike, frames: Iterable[Frame]) -> None:
    from .io import atomic_write

    atomic_write(path, dumps_trace(frames))


def read_trace(path: str | os.PathLike) -> list[Frame]:
    with open(path, encoding="utf-8") as fh:
        return loads_trace(fh.read())
