"""Acceptance suite: one check per criterion, each printing a PASS/FAIL line.

Run under pytest, or directly with ``python3 tests/test_acceptance.py`` for
the summary lines alone.
"""

from __future__ import annotations

import contextlib
import io
import json
import math
import os
import statistics
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from oracles import brute_force  # noqa: E402

from edgeboost import presets  # noqa: E402
from edgeboost.cli import main as cli_main  # noqa: E402
from edgeboost.core import bucket_index  # noqa: E402
from edgeboost.losses import DiscriminatorOutputs, ExitLosses, stage1_loss, stage2_loss  # noqa: E402
from edgeboost.profiles import (  # noqa: E402
    PROFILED_BATCH_SIZES,
    deserialize_profiles,
    enforce_monotone,
    latency_batch,
    latency_single,
    serialize_profiles,
)
from edgeboost.scheduler import (  # noqa: E402
    GapFrame,
    GapInstance,
    instance_to_dict,
    plan_cost,
    schedule_exact,
    schedule_heuristic,
)
from edgeboost.simulator import DiscriminatorModel, predict_difficulty, run_simulation, thin_trace  # noqa: E402
from edgeboost.synth import random_accuracy_profile, random_instance, random_latency_profile  # noqa: E402
from edgeboost.vap import generate_trace, make_filter  # noqa: E402

PROPERTY_SEED = 2024
N_INSTANCES = 500

_cache: dict = {}


def _line(number: int, ok: bool, text: str) -> str:
    return f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {text}"


def _instances():
    if "instances" not in _cache:
        rng = np.random.default_rng(PROPERTY_SEED)
        _cache["instances"] = [random_instance(rng, max_frames=6, max_beta=3) for _ in range(N_INSTANCES)]
    return _cache["instances"]


def _solved():
    if "solved" not in _cache:
        t0 = time.perf_counter()
        rows = []
        for inst in _instances():
            rows.append((inst, schedule_heuristic(inst), schedule_exact(inst), brute_force(inst)))
        _cache["solved"] = rows
        _cache["solve_seconds"] = time.perf_counter() - t0
    return _cache["solved"]


# -- criteria ----------------------------------------------------------------


def criterion_1():
    rows = _solved()
    elapsed = _cache["solve_seconds"]
    mismatches = heur_above = over_budget = same_plan = 0
    for inst, heur, exact, ref in rows:
        if ref is None:
            mismatches += exact.feasible
        elif not exact.feasible or abs(exact.total_gain - ref[0]) > 1e-9:
            mismatches += 1
        elif tuple(exact.levels()) == ref[2]:
            same_plan += 1
        if heur.total_gain > exact.total_gain:
            heur_above += 1
        for plan in (heur, exact):
            if plan.feasible and not plan_cost(plan.assignment, inst.latency) <= inst.budget_ms:
                over_budget += 1
    ok = mismatches == 0 and heur_above == 0 and over_budget == 0 and elapsed < 10.0
    text = (
        f"{len(rows)} instances, oracle mismatches={mismatches} (identical plans {same_plan}), "
        f"heuristic>oracle={heur_above}, feasible-over-budget={over_budget}, {elapsed:.2f}s (< 10s)"
    )
    return ok, text


def criterion_2():
    gaps = []
    for _, heur, exact, _ in _solved():
        if exact.total_gain > 0:
            gaps.append((exact.total_gain - heur.total_gain) / exact.total_gain)
        else:
            gaps.append(0.0)
    arr = np.array(gaps)
    mean = float(arr.mean())
    text = (
        f"mean relative gap {mean:.4f} (<= 0.10); median {np.median(arr):.4f}, "
        f"p90 {np.quantile(arr, 0.9):.4f}, p99 {np.quantile(arr, 0.99):.4f}, max {arr.max():.4f}, "
        f"nonzero {np.count_nonzero(arr > 0)}/{arr.size}"
    )
    return mean <= 0.10, text


def _large_instance(m: int = 10_000) -> GapInstance:
    rng = np.random.default_rng(PROPERTY_SEED)
    latency, accuracy = presets.demo_latency_profile(), presets.demo_accuracy_profile()
    frames = tuple(GapFrame(i, float(d)) for i, d in enumerate(rng.random(m)))
    # budget just above the unenhanced cost forces nearly every downgrade
    zero = plan_cost({i: 0 for i in range(m)}, latency)
    return GapInstance(frames, latency, accuracy, zero * 1.01)


def criterion_3():
    inst = _large_instance()
    m, beta = len(inst.frames), inst.beta
    times, plan = [], None
    for _ in range(5):
        t0 = time.perf_counter()
        plan = schedule_heuristic(inst)
        times.append(time.perf_counter() - t0)
    median_ms = statistics.median(times) * 1e3
    ok = median_ms <= 100.0 and plan.downgrade_steps <= m * beta and plan.feasible
    text = (
        f"m={m} beta={beta}: median {median_ms:.1f} ms over 5 runs (<= 100 ms), "
        f"steps {plan.downgrade_steps} <= {m * beta}, feasible={plan.feasible}"
    )
    return ok, text


def criterion_4():
    inst = presets.worked_instance()
    results = {}
    for name, solver in (("heuristic", schedule_heuristic), ("oracle", schedule_exact)):
        plan = solver(inst)
        results[name] = (tuple(plan.levels()), plan.total_gain, plan.total_latency_ms)
    expected = ((2, 0, 2), 12.0, 50.0)
    ok = all(v == expected for v in results.values())
    return ok, f"heuristic={results['heuristic']} oracle={results['oracle']} expected={expected}"


def criterion_5():
    perfect = stage1_loss(DiscriminatorOutputs([1.0], [0.0], [1.0], [0.0]))
    coin = stage1_loss(DiscriminatorOutputs([0.5], [0.5], [0.5], [0.5]))
    mixed = stage1_loss(DiscriminatorOutputs([0.9], [0.2], [0.8], [0.1]))
    rng = np.random.default_rng(PROPERTY_SEED)
    worst = 0.0
    for _ in range(1000):
        beta = int(rng.integers(1, 7))
        a = rng.uniform(0, 5, beta + 1)
        b = rng.uniform(0, 5, beta + 1)
        s1, s2 = rng.uniform(-10, 0, 2)
        lam = float(rng.uniform(0, 1))
        # the objective is affine in (exit losses, s1)
        mix = stage2_loss(ExitLosses(tuple(lam * a + (1 - lam) * b)), lam * s1 + (1 - lam) * s2)
        combo = lam * stage2_loss(ExitLosses(tuple(a)), s1) + (1 - lam) * stage2_loss(ExitLosses(tuple(b)), s2)
        shift = stage2_loss(ExitLosses(tuple(a)), s1 + 1.0) - stage2_loss(ExitLosses(tuple(a)), s1)
        worst = max(worst, abs(mix - combo), abs(shift - 1.0))
    checks = (
        perfect == 0.0,
        abs(coin - 4 * math.log(0.5)) <= 1e-12,
        abs(mixed - (-0.657008)) <= 1e-6,
        worst <= 1e-12,
    )
    text = (
        f"perfect={perfect!r} (== 0), coin-flip err {abs(coin - 4 * math.log(0.5)):.1e} (<= 1e-12), "
        f"mixed={mixed:.7f} vs -0.657008 (<= 1e-6), stage2 linearity max err {worst:.1e} (<= 1e-12)"
    )
    return all(checks), text


def criterion_6():
    rng = np.random.default_rng(PROPERTY_SEED)
    not_idem = 0
    for _ in range(200):
        acc = random_accuracy_profile(rng, int(rng.integers(1, 6)))
        once = enforce_monotone(acc)
        if enforce_monotone(once) != once:
            not_idem += 1
    monotone_fail = subadd_fail = 0
    sizes = range(1, 2 * PROFILED_BATCH_SIZES[-1] + 1)
    for _ in range(1000):
        beta = int(rng.integers(1, 6))
        lat = random_latency_profile(rng, beta, subset=bool(rng.random() < 0.5))
        for k in range(beta + 1):
            single = latency_single(lat, k)
            prev = 0.0
            for n in sizes:
                cost = latency_batch(lat, k, n)
                monotone_fail += cost < prev
                subadd_fail += cost > n * single
                prev = cost
    trip_fail = 0
    for _ in range(100):
        beta = int(rng.integers(1, 6))
        lat, acc = random_latency_profile(rng, beta), random_accuracy_profile(rng, beta)
        if deserialize_profiles(serialize_profiles(lat, acc)) != (lat, acc):
            trip_fail += 1
    ok = not (not_idem or monotone_fail or subadd_fail or trip_fail)
    text = (
        f"idempotence failures {not_idem}/200, batch monotonicity failures {monotone_fail}, "
        f"subadditivity failures {subadd_fail} over 1000 grids, round-trip failures {trip_fail}/100"
    )
    return ok, text


def criterion_7():
    n = 10
    confusion = []
    for i in range(n):
        row = [0.0] * n
        if i == n - 1:
            row[i], row[i - 1], row[i - 2] = 0.8, 0.15, 0.05
        else:
            row[i] = 1.0
        confusion.append(tuple(row))
    model = DiscriminatorModel(confusion=tuple(confusion))
    rng = np.random.default_rng(PROPERTY_SEED)
    samples = 10_000
    kept = sum(bucket_index(predict_difficulty(model, 0.95, rng)) == n - 1 for _ in range(samples))
    rate = kept / samples
    return abs(rate - 0.80) <= 0.02, f"top-bucket retention {rate:.4f} over {samples} samples (0.80 +/- 0.02)"


def criterion_8():
    t0 = time.perf_counter()
    trace = generate_trace(presets.demo_trace_config())
    thinned = thin_trace(trace)
    latency, accuracy = presets.demo_latency_profile(), presets.demo_accuracy_profile()
    disc = DiscriminatorModel()
    parts, ok = [], True
    for name, params in presets.DEMO_FILTERS.items():
        flt = make_filter(name, **params)
        reps = {
            s: run_simulation(trace, flt, disc, latency, accuracy, s)
            for s in ("none", "greedy_arrival", "heuristic")
        }
        thin = run_simulation(thinned, flt, disc, latency, accuracy, "heuristic")
        g = {s: r.aggregates.mean_gain_per_frame for s, r in reps.items()}
        a = g["heuristic"] > g["none"] and g["heuristic"] > g["greedy_arrival"]
        b = all(h.utilization >= z.utilization for h, z in zip(reps["heuristic"].records, reps["none"].records))
        c = thin.aggregates.mean_gain_per_frame >= g["heuristic"]
        violations = 0
        for rep in (*reps.values(), thin):
            for r in rep.records:
                violations += r.deadline_missed or (r.plan.feasible and r.busy_ms > rep.window_ms)
        d = violations == 0
        ok = ok and a and b and c and d
        parts.append(
            f"{name}: gain/frame heuristic {g['heuristic']:.3f} > greedy {g['greedy_arrival']:.3f} > none "
            f"{g['none']:.1f} [{'ok' if a else 'x'}], util per-window [{'ok' if b else 'x'}], "
            f"thinned {thin.aggregates.mean_gain_per_frame:.3f} [{'ok' if c else 'x'}], "
            f"violations {violations} over {len(reps['heuristic'].records)} windows"
        )
    elapsed = time.perf_counter() - t0
    ok = ok and elapsed < 60.0
    return ok, "; ".join(parts) + f"; {elapsed:.1f}s (< 60s)"


def _snapshot(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def _run_cli(argv: list[str]) -> tuple[int, str]:
    out = io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(io.StringIO()):
        code = cli_main(argv)
    return code, out.getvalue()


def criterion_9():
    commands = [
        ["trace-gen", "--duration", "20", "--fps", "6", "--rate", "bursty", "--out", "small.jsonl"],
        ["trace-gen", "--demo", "--duration", "60", "--out", "demo.jsonl"],
        ["profile-synth", "--out", "profiles.json"],
        ["profile-validate", "profiles.json"],
        ["schedule", "worked.json", "--out", "plan_h.json"],
        ["schedule", "worked.json", "--oracle", "--out", "plan_o.json"],
        ["simulate", "--trace", "demo.jsonl", "--sigma", "0.1", "--out", "sim"],
        ["simulate", "--trace", "demo.jsonl", "--format", "csv", "--filter", "vigil", "--out", "sim_csv"],
        ["compare", "--trace", "small.jsonl", "--filter", "none", "--sigma", "0.05", "--out", "cmp"],
        ["compare", "--trace", "demo.jsonl", "--filter", "noscope", "--format", "csv", "--out", "cmp_demo"],
    ]
    differing = []
    cwd = os.getcwd()
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        (root / "worked.json").write_text(json.dumps(instance_to_dict(presets.worked_instance())))
        os.chdir(root)
        try:
            for argv in commands:
                runs = []
                for _ in range(2):
                    code, stdout = _run_cli(argv + ["--seed", "7"] if argv[0] in ("simulate", "compare") else argv)
                    runs.append((code, stdout, _snapshot(root)))
                if runs[0] != runs[1] or runs[0][0] != 0:
                    differing.append(argv[0])
        finally:
            os.chdir(cwd)
    ok = not differing
    text = f"{len(commands)} commands run twice; outputs byte-identical" + (
        "" if ok else f"; differing or failing: {differing}"
    )
    return ok, text


CRITERIA = [
    criterion_1,
    criterion_2,
    criterion_3,
    criterion_4,
    criterion_5,
    criterion_6,
    criterion_7,
    criterion_8,
    criterion_9,
]


@pytest.mark.parametrize("number", range(1, len(CRITERIA) + 1))
def test_criterion(number, capsys):
    ok, text = CRITERIA[number - 1]()
    with capsys.disabled():
        print("\n" + _line(number, ok, text))
    assert ok, text


if __name__ == "__main__":
    failed = 0
    for i, fn in enumerate(CRITERIA, 1):
        ok, text = fn()
        failed += not ok
        print(_line(i, ok, text), flush=True)
    sys.exit(1 if failed else 0)
