"""Report figures written next to the delimited outputs.

These are presentation artifacts (PNG via matplotlib); the byte-stable SVG
Gantt lives in gantt.py and is rendered without a plotting library.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .schedule import PROCESS, SETUP, TRANSPORT, Kpis, Schedule

_KIND_COLORS = {SETUP: "#888888", TRANSPORT: "#cccccc"}
_JOB_CMAP = plt.get_cmap("tab10")


def save_gantt_figure(schedule: Schedule, path: str | Path, title: str = "") -> None:
    instance = schedule.instance
    m = instance.n_machines
    fig, ax = plt.subplots(figsize=(10, 0.6 * m + 1.5))
    for k in range(m):
        for iv in schedule.machine_lane(k):
            width = iv.stop - iv.start
            if width <= 0:
                continue
            if iv.kind == PROCESS:
                color = _JOB_CMAP(iv.job_id % 10)
                height, offset = 0.8, 0.0
            else:
                color = _KIND_COLORS[iv.kind]
                height, offset = 0.4, 0.4
            ax.barh(k + offset / 2, width, left=iv.start, height=height,
                    color=color, edgecolor="black", linewidth=0.3)
            if iv.kind == PROCESS and width > 6:
                ax.text(iv.start + width / 2, k, instance.jobs[iv.job_id].name,
                        ha="center", va="center", color="white", fontsize=8)
    ax.set_yticks(range(m))
    ax.set_yticklabels([mc.name for mc in instance.machines])
    ax.invert_yaxis()
    ax.set_xlabel("minutes")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_kpi_figure(kpis_by_policy: dict[str, Kpis], path: str | Path) -> None:
    names = list(kpis_by_policy)
    fig, axes = plt.subplots(1, 2, figsize=(10, 3.5))
    axes[0].bar(names, [kpis_by_policy[n].makespan for n in names], color="#4e79a7")
    axes[0].set_ylabel("makespan [min]")
    axes[1].bar(names, [kpis_by_policy[n].total_tardiness for n in names], color="#e15759")
    axes[1].set_ylabel("total tardiness [min]")
    for ax in axes:
        ax.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_curve_figure(curve: list[tuple[int, float, float]], path: str | Path) -> None:
    episodes = [c[0] for c in curve]
    fig, ax1 = plt.subplots(figsize=(8, 3.5))
    ax1.plot(episodes, [c[1] for c in curve], color="#4e79a7", label="return")
    ax1.set_xlabel("episode")
    ax1.set_ylabel("return", color="#4e79a7")
    ax2 = ax1.twinx()
    ax2.plot(episodes, [c[2] for c in curve], color="#e15759", label="makespan")
    ax2.set_ylabel("makespan [min]", color="#e15759")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_evaluation_figure(makespans_by_policy: dict[str, list[float]], path: str | Path) -> None:
    names = list(makespans_by_policy)
    fig, ax = plt.subplots(figsize=(8, 3.5))
    ax.boxplot([makespans_by_policy[n] for n in names], tick_labels=names)
    ax.set_ylabel("makespan [min]")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
