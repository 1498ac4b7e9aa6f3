"""Command-line front end.

Exit codes: 0 on success (an infeasible plan is still a result), 2 for
configuration or input errors, 3 when the exhaustive scheduler's search
space exceeds its cap. Files are written atomically; anything that varies
between runs (wall-clock timings) goes to stderr unless ``--timing`` is
passed.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import os
import sys
import time
from pathlib import Path

from . import presets
from .core import InvalidInputError
from .io import atomic_write, read_json, write_json
from .profiles import ProfileError, deserialize_profiles, profiles_from_dict, serialize_profiles
from .scheduler import (
    DEFAULT_ORACLE_LIMIT,
    OracleCapExceeded,
    instance_from_dict,
    schedule_exact,
    schedule_heuristic,
)
from .simulator import SCHEDULERS, DiscriminatorModel, GpuModel, SimulationReport, run_simulation
from .vap import (
    BurstyRate,
    ConstantRate,
    SinusoidalRate,
    TraceConfig,
    generate_trace,
    make_filter,
    read_trace,
    write_trace,
)

SEED_ENV = "EDGEBOOST_SEED"
DEFAULT_SEED = 7
EXIT_CONFIG = 2
EXIT_CAP = 3

log = logging.getLogger("edgeboost")


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise InvalidInputError(f"{SEED_ENV} must be an integer, got {raw!r}")


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


# -- trace-gen -------------------------------------------------------------


def _trace_config(args) -> TraceConfig:
    if args.config:
        doc = read_json(args.config)
        if args.seed is not None:
            doc["seed"] = args.seed
        return TraceConfig.from_dict(doc)
    if args.demo:
        cfg = presets.demo_trace_config(seed=args.seed if args.seed is not None else default_seed())
        return cfg if args.duration is None else dataclasses.replace(cfg, duration_s=args.duration)
    if args.rate == "sinusoidal":
        rate = SinusoidalRate(args.period, args.amplitude)
    elif args.rate == "bursty":
        rate = BurstyRate(args.burst_prob, args.burst_len, args.base_rate)
    else:
        rate = ConstantRate()
    return TraceConfig(
        duration_s=args.duration if args.duration is not None else 10.0,
        fps=args.fps,
        cameras=args.cameras,
        rate_process=rate,
        seed=args.seed if args.seed is not None else default_seed(),
    )


def cmd_trace_gen(args) -> int:
    cfg = _trace_config(args)
    frames = generate_trace(cfg)
    write_trace(args.out, frames)
    print(f"wrote {len(frames)} frames to {args.out}")
    duration = max(cfg.duration_s, 1e-9)
    for name, params in presets.DEMO_FILTERS.items():
        kept = len(make_filter(name, **params).apply(frames))
        share = kept / len(frames) if frames else 0.0
        print(f"  {name:8s} keeps {kept:7d} ({share:6.1%}, {kept / duration:6.1f} frames/s)")
    return 0


# -- profiles --------------------------------------------------------------


def cmd_profile_synth(args) -> int:
    latency = presets.demo_latency_profile(args.detector)
    accuracy = presets.demo_accuracy_profile()
    atomic_write(args.out, serialize_profiles(latency, accuracy))
    print(f"wrote {args.detector} profile (beta={latency.beta}) to {args.out}")
    return 0


def cmd_profile_validate(args) -> int:
    latency, accuracy = deserialize_profiles(Path(args.path).read_text(encoding="utf-8"))
    print(f"ok: beta={latency.beta} mu_d={latency.mu_d_ms} ms buckets={accuracy.n_buckets}")
    for k in range(latency.beta + 1):
        print(f"  kappa={k} single={latency.single(k):.3f} ms")
    if not accuracy.is_monotone():
        print("note: accuracy profile is not monotone in kappa; schedulers require enforce_monotone")
    return 0


def _load_profiles(path: str | None, detector: str):
    if path:
        return deserialize_profiles(Path(path).read_text(encoding="utf-8"))
    return presets.demo_latency_profile(detector), presets.demo_accuracy_profile()


# -- schedule --------------------------------------------------------------


def cmd_schedule(args) -> int:
    doc = read_json(args.instance)
    if "profiles" in doc:
        latency, accuracy = profiles_from_dict(doc["profiles"])
    elif "profiles_path" in doc:
        ref = Path(args.instance).parent / doc["profiles_path"]
        latency, accuracy = deserialize_profiles(ref.read_text(encoding="utf-8"))
    else:
        raise InvalidInputError("instance needs embedded 'profiles' or a 'profiles_path'")
    inst = instance_from_dict(doc, latency, accuracy)
    t0 = time.perf_counter()
    plan = schedule_exact(inst, args.limit) if args.oracle else schedule_heuristic(inst)
    elapsed = time.perf_counter() - t0
    write_json(args.out, plan.to_dict())
    print(
        f"{'oracle' if args.oracle else 'heuristic'}: gain={plan.total_gain:.6g} "
        f"cost={plan.total_latency_ms:.6g} ms feasible={plan.feasible} steps={plan.downgrade_steps}"
    )
    print(f"wall time {elapsed * 1e3:.3f} ms", file=sys.stderr)
    return 0


# -- simulate / compare ----------------------------------------------------


def _sim_inputs(args):
    if args.trace:
        trace = read_trace(args.trace)
    else:
        trace = generate_trace(presets.demo_trace_config(seed=args.seed))
    latency, accuracy = _load_profiles(args.profiles, args.detector)
    params = dict(presets.DEMO_FILTERS.get(args.filter, {}))
    for key in ("diff_threshold", "min_objects", "conf_threshold"):
        if getattr(args, key) is not None:
            params[key] = getattr(args, key)
    flt = make_filter(args.filter, **params)
    confusion = None
    if args.confusion:
        confusion = tuple(tuple(row) for row in read_json(args.confusion))
    disc = DiscriminatorModel(args.sigma, confusion, latency.mu_d_ms, accuracy.granularity)
    return trace, flt, disc, latency, accuracy, GpuModel(args.window_ms)


def _write_report(out: Path, stem: str, report: SimulationReport, figures: bool) -> None:
    atomic_write(out / f"{stem}.csv", report.to_csv())
    write_json(out / f"{stem}.json", report.summary())
    if figures:
        from .plotting import plot_report

        plot_report(report, out / f"{stem}.png")


def cmd_simulate(args) -> int:
    trace, flt, disc, latency, accuracy, gpu = _sim_inputs(args)
    report = run_simulation(trace, flt, disc, latency, accuracy, args.scheduler, gpu, args.seed, args.limit)
    out = Path(args.out)
    _write_report(out, "report", report, not args.no_figures)
    if args.format == "csv":
        sys.stdout.write(report.to_csv())
    else:
        summary = report.summary()
        summary.pop("throughput_fps")
        print(json.dumps(summary, indent=2))
    print(f"scheduler time {report.scheduler_seconds * 1e3:.1f} ms", file=sys.stderr)
    return 0


def cmd_compare(args) -> int:
    trace, flt, disc, latency, accuracy, gpu = _sim_inputs(args)
    reports: dict[str, SimulationReport] = {}
    for choice in ("none", "greedy_arrival", "heuristic", "oracle"):
        try:
            reports[choice] = run_simulation(trace, flt, disc, latency, accuracy, choice, gpu, args.seed, args.limit)
        except OracleCapExceeded as exc:
            log.warning("skipping oracle arm: %s", exc)
    out = Path(args.out)
    columns = ["scheduler", "mean_gain_per_frame", "mean_utilization", "deadline_misses"]
    if args.timing:
        columns.append("scheduler_ms")
    rows = []
    for name, rep in reports.items():
        agg = rep.aggregates
        row = [name, repr(agg.mean_gain_per_frame), repr(agg.mean_utilization), agg.deadline_misses]
        if args.timing:
            row.append(f"{rep.scheduler_seconds * 1e3:.3f}")
        rows.append(row)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    atomic_write(out / "compare.csv", buf.getvalue())
    write_json(out / "compare.json", {name: rep.summary() for name, rep in reports.items()})
    for name, rep in reports.items():
        _write_report(out, f"report_{name}", rep, False)
    if not args.no_figures:
        from .plotting import plot_compare

        plot_compare(reports, out / "compare.png")
    if args.format == "csv":
        sys.stdout.write(buf.getvalue())
    else:
        width = max(len(n) for n in reports)
        for name, rep in reports.items():
            agg = rep.aggregates
            print(
                f"{name:{width}s}  gain/frame={agg.mean_gain_per_frame:8.4f}  "
                f"util={agg.mean_utilization:6.3f}  misses={agg.deadline_misses}"
            )
    if not args.timing:
        for name, rep in reports.items():
            print(f"{name}: scheduler time {rep.scheduler_seconds * 1e3:.1f} ms", file=sys.stderr)
    return 0


# -- parser ----------------------------------------------------------------


def _add_sim_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--trace", help="trace file (JSON lines); default: bundled demo trace")
    p.add_argument("--profiles", help="profile document; default: bundled preset")
    p.add_argument("--detector", default="yolov3", choices=sorted(presets.DETECTORS))
    p.add_argument("--filter", default="glimpse", choices=["glimpse", "vigil", "noscope", "none"])
    p.add_argument("--diff-threshold", type=float)
    p.add_argument("--min-objects", type=int)
    p.add_argument("--conf-threshold", type=float)
    p.add_argument("--sigma", type=float, default=0.0, help="discriminator noise std-dev")
    p.add_argument("--confusion", help="JSON bucket confusion matrix for the discriminator")
    p.add_argument("--window-ms", type=float, default=1000.0)
    p.add_argument("--limit", type=int, default=DEFAULT_ORACLE_LIMIT, help="oracle enumeration cap")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--format", choices=["csv", "json"], default="json", help="stdout rendering")
    p.add_argument("--no-figures", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="edgeboost", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    p = sub.add_parser("trace-gen", help="generate a synthetic multi-camera trace")
    p.add_argument("--config", help="TraceConfig JSON file (overrides the flags below)")
    p.add_argument("--demo", action="store_true", help="use the bundled 10-minute demo settings")
    p.add_argument("--fps", type=float, default=25.0)
    p.add_argument("--duration", type=float, help="seconds (default 10)")
    p.add_argument("--cameras", type=int, default=1)
    p.add_argument("--rate", choices=["constant", "sinusoidal", "bursty"], default="constant")
    p.add_argument("--period", type=float, default=60.0)
    p.add_argument("--amplitude", type=float, default=0.5)
    p.add_argument("--burst-prob", type=float, default=0.02)
    p.add_argument("--burst-len", type=int, default=50)
    p.add_argument("--base-rate", type=float, default=0.3)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="trace.jsonl")
    p.set_defaults(func=cmd_trace_gen)

    p = sub.add_parser("profile-synth", help="write a bundled demo profile document")
    p.add_argument("--detector", default="yolov3", choices=sorted(presets.DETECTORS))
    p.add_argument("--out", default="profiles.json")
    p.set_defaults(func=cmd_profile_synth)

    p = sub.add_parser("profile-validate", help="check a profile document's invariants")
    p.add_argument("path")
    p.set_defaults(func=cmd_profile_validate)

    p = sub.add_parser("schedule", help="solve one scheduling instance")
    p.add_argument("instance")
    p.add_argument("--oracle", action="store_true", help="exhaustive search instead of the heuristic")
    p.add_argument("--limit", type=int, default=DEFAULT_ORACLE_LIMIT)
    p.add_argument("--out", default="plan.json")
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("simulate", help="run one windowed simulation")
    _add_sim_args(p)
    p.add_argument("--scheduler", choices=SCHEDULERS, default="heuristic")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="run every scheduler on the same trace")
    _add_sim_args(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--timing", action="store_true", help="include scheduler wall time in the table")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if getattr(args, "seed", None) is None and args.command in ("simulate", "compare"):
            args.seed = default_seed()
        return args.func(args)
    except OracleCapExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except (InvalidInputError, ProfileError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
