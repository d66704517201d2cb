"""Timing harness for the pipeline stages.

Reports p50/p95 per stage and end-to-end throughput, excluding one warmup
pass. Timings cover the post-network pipeline stages only, so they support
rather than reproduce any published full-system frame rates. Can run the
same frames under both kernel backends for comparison.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import backend
from .config import PipelineConfig
from .pipeline import PipelineInputs, run_pipeline

NOTE = ("timings cover post-network pipeline stages only; "
        "not comparable to published full-system FPS")


@dataclass(frozen=True)
class StageStats:
    p50_us: float
    p95_us: float
    mean_us: float


@dataclass(frozen=True)
class BenchReport:
    backend: str
    frames: int
    repetitions: int
    stages: dict[str, StageStats]
    end_to_end_hz: float
    pillar_counts: list[int]
    timer_overhead_us: float


def measure_noop_us(samples: int = 200) -> float:
    """Median cost of timing an empty stage; bounds harness overhead."""
    costs = []
    for _ in range(samples):
        start = time.perf_counter_ns()
        stop = time.perf_counter_ns()
        costs.append((stop - start) / 1000.0)
    return float(np.median(costs))


def run_benchmark(cfg: PipelineConfig, frames: list[PipelineInputs],
                  repetitions: int = 5) -> BenchReport:
    """Time every stage over ``repetitions`` passes of the frame list.

    One extra warmup pass runs first and is discarded, so ``repetitions=1``
    yields exactly one measured sample per frame.
    """
    if not frames:
        raise ValueError("benchmark needs at least one frame")
    samples: dict[str, list[int]] = {}
    totals: list[int] = []
    pillar_counts: list[int] = []
    for rep in range(repetitions + 1):
        for inputs in frames:
            result = run_pipeline(cfg, inputs)
            if rep == 0:
                continue
            for name, us in result.timings_us.items():
                samples.setdefault(name, []).append(us)
            totals.append(result.total_us)
            if rep == 1:
                pillar_counts.append(result.graph.count)

    stages = {name: StageStats(p50_us=float(np.percentile(vals, 50)),
                               p95_us=float(np.percentile(vals, 95)),
                               mean_us=float(np.mean(vals)))
              for name, vals in samples.items()}
    mean_total_s = float(np.mean(totals)) * 1e-6
    return BenchReport(backend=backend.active_backend(),
                       frames=len(frames), repetitions=repetitions,
                       stages=stages,
                       end_to_end_hz=1.0 / mean_total_s if mean_total_s > 0 else 0.0,
                       pillar_counts=pillar_counts,
                       timer_overhead_us=measure_noop_us())


def format_report(report: BenchReport, reference_pillars: int | None = None) -> str:
    lines = [f"# {NOTE}",
             f"backend={report.backend} frames={report.frames} "
             f"repetitions={report.repetitions} "
             f"timer_overhead_us={report.timer_overhead_us:.3f}",
             f"{'stage':>14} {'p50_us':>12} {'p95_us':>12} {'mean_us':>12}"]
    for name, st in report.stages.items():
        lines.append(f"{name:>14} {st.p50_us:12.1f} {st.p95_us:12.1f} {st.mean_us:12.1f}")
    lines.append(f"end_to_end_hz={report.end_to_end_hz:.2f}")
    pillars = ",".join(str(m) for m in report.pillar_counts)
    if reference_pillars is not None:
        lines.append(f"pillars_per_frame={pillars} (reference scan average: "
                     f"{reference_pillars})")
    else:
        lines.append(f"pillars_per_frame={pillars}")
    return "\n".join(lines)


def compare_backends(cfg: PipelineConfig, frames: list[PipelineInputs],
                     repetitions: int = 5) -> dict[str, BenchReport]:
    """Benchmark the NumPy fallback and, when built, the compiled kernels."""
    reports: dict[str, BenchReport] = {}
    previous = backend.active_backend()
    names = ["python"] + (["compiled"] if backend.compiled_available() else [])
    try:
        for name in names:
            backend.set_backend(name)
            reports[name] = run_benchmark(cfg, frames, repetitions)
    finally:
        backend.set_backend(previous)
    return reports


def format_comparison(reports: dict[str, BenchReport]) -> str:
    if "compiled" not in reports:
        return (format_report(reports["python"])
                + "\ncompiled kernels not available; no comparison")
    py, cc = reports["python"], reports["compiled"]
    names = [n for n in py.stages if n in cc.stages]
    lines = [f"# {NOTE}",
             f"{'stage':>14} {'python_p50_us':>14} {'compiled_p50_us':>16} {'speedup':>8}"]
    for name in names:
        a, b = py.stages[name].p50_us, cc.stages[name].p50_us
        ratio = a / b if b > 0 else float("inf")
        lines.append(f"{name:>14} {a:14.1f} {b:16.1f} {ratio:8.2f}")
    lines.append(f"end_to_end_hz: python={py.end_to_end_hz:.2f} "
                 f"compiled={cc.end_to_end_hz:.2f}")
    return "\n".join(lines)
