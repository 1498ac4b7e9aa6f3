"""Figures for simulation and comparison reports."""

from __future__ import annotations

import os
from typing import Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .simulator import SimulationReport  # noqa: E402

__all__ = ["savefig", "plot_report", "plot_compare"]

_STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def savefig(fig, path: str | os.PathLike) -> None:
    """Save as PNG with metadata stripped so reruns are byte-identical."""
    fig.tight_layout()
    fig.savefig(path, format="png", dpi=120, metadata={"Software": None})
    plt.close(fig)


def plot_report(report: SimulationReport, path: str | os.PathLike) -> None:
    windows = [r.window_index for r in report.records]
    with plt.rc_context(_STYLE):
        fig, (ax_u, ax_g) = plt.subplots(2, 1, sharex=True, figsize=(6.4, 4.2))
        ax_u.plot(windows, [r.utilization for r in report.records], lw=0.8, color="C0")
        ax_u.set_ylabel("GPU utilization")
        ax_u.set_ylim(0, 1.05)
        ax_t = ax_u.twinx()
        ax_t.plot(windows, report.aggregates.throughput, lw=0.6, color="C1", alpha=0.6)
        ax_t.set_ylabel("survivors / s")
        ax_g.plot(windows, [r.gain for r in report.records], lw=0.8, color="C2")
        ax_g.set_ylabel("gain (points)")
        ax_g.set_xlabel(f"window ({report.window_ms:g} ms)")
        ax_u.set_title(f"scheduler: {report.scheduler}")
        savefig(fig, path)


def plot_compare(reports: Mapping[str, SimulationReport], path: str | os.PathLike) -> None:
    names = list(reports)
    with plt.rc_context(_STYLE):
        fig, (ax_g, ax_u) = plt.subplots(1, 2, figsize=(6.4, 2.8))
        ax_g.bar(names, [reports[n].aggregates.mean_gain_per_frame for n in names], color="C2")
        ax_g.set_ylabel("mean gain per frame")
        ax_u.bar(names, [reports[n].aggregates.mean_utilization for n in names], color="C0")
        ax_u.set_ylabel("mean utilization")
        ax_u.set_ylim(0, 1)
        for ax in (ax_g, ax_u):
            ax.tick_params(axis="x", rotation=30)
        savefig(fig, path)
