"""Gantt rendering: one lane per machine, setup/transport/process visually distinct.

The SVG is written by hand rather than through a plotting library so the
bytes are a pure function of the schedule: stable ordering, fixed number
formatting, no timestamps or generator metadata.
"""

from __future__ import annotations

from .schedule import PROCESS, SETUP, Schedule

_JOB_COLORS = (
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1",
    "#76b7b2", "#edc948", "#ff9da7", "#9c755f", "#bab0ac",
)
_SETUP_COLOR = "#888888"
_TRANSPORT_COLOR = "#cccccc"

_LANE_H = 28
_LANE_GAP = 10
_LEFT = 70
_TOP = 30
_WIDTH = 860
_AXIS_H = 30


def _fmt(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


def render_gantt(schedule: Schedule, format: str = "svg") -> str:
    format = format.lower()
    if format == "svg":
        return _render_svg(schedule)
    if format == "text":
        return _render_text(schedule)
    raise ValueError(f"unknown gantt format {format!r}")


def _horizon(schedule: Schedule) -> float:
    return max((iv.stop for iv in schedule.intervals), default=0.0)


def _render_text(schedule: Schedule) -> str:
    instance = schedule.instance
    lines = [f"gantt {instance.name} horizon={_fmt(_horizon(schedule))}"]
    for k in range(instance.n_machines):
        lane = schedule.machine_lane(k)
        parts = []
        for iv in lane:
            if iv.stop - iv.start <= 0:
                continue
            who = "-" if iv.job_id is None else instance.jobs[iv.job_id].name
            parts.append(f"[{_fmt(iv.start)},{_fmt(iv.stop)}) {iv.kind} {who}")
        lines.append(f"{instance.machines[k].name}: " + " | ".join(parts))
    return "\n".join(lines) + "\n"


def _render_svg(schedule: Schedule) -> str:
    instance = schedule.instance
    m = instance.n_machines
    horizon = _horizon(schedule)
    scale = (_WIDTH - _LEFT - 20) / horizon if horizon > 0 else 1.0
    height = _TOP + m * (_LANE_H + _LANE_GAP) + _AXIS_H

    def x(t: float) -> float:
        return _LEFT + t * scale

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{height}" '
        f'font-family="sans-serif" font-size="11">',
        f'<rect width="{_WIDTH}" height="{height}" fill="white"/>',
    ]
    for k in range(m):
        top = _TOP + k * (_LANE_H + _LANE_GAP)
        parts.append(
            f'<text x="8" y="{top + _LANE_H / 2 + 4:.1f}">{instance.machines[k].name}</text>'
        )
        parts.append(
            f'<line x1="{_LEFT}" y1="{top + _LANE_H}" x2="{_WIDTH - 10}" '
            f'y2="{top + _LANE_H}" stroke="#dddddd"/>'
        )
        for iv in schedule.machine_lane(k):
            if iv.stop - iv.start <= 0:
                continue
            x0, x1 = x(iv.start), x(iv.stop)
            if iv.kind == PROCESS:
                color = _JOB_COLORS[iv.job_id % len(_JOB_COLORS)]
                h, dy = _LANE_H, 0.0
            elif iv.kind == SETUP:
                color = _SETUP_COLOR
                h, dy = _LANE_H * 0.6, _LANE_H * 0.4
            else:
                color = _TRANSPORT_COLOR
                h, dy = _LANE_H * 0.35, _LANE_H * 0.65
            parts.append(
                f'<rect x="{x0:.2f}" y="{top + dy:.2f}" width="{max(x1 - x0, 0.5):.2f}" '
                f'height="{h:.2f}" fill="{color}" stroke="#333333" stroke-width="0.5">'
                f"<title>{_label(schedule, iv)}</title></rect>"
            )
            if iv.kind == PROCESS and (x1 - x0) > 24:
                name = instance.jobs[iv.job_id].name
                parts.append(
                    f'<text x="{(x0 + x1) / 2:.2f}" y="{top + _LANE_H / 2 + 4:.1f}" '
                    f'text-anchor="middle" fill="white">{name}</text>'
                )
    axis_y = _TOP + m * (_LANE_H + _LANE_GAP) + 12
    parts.append(
        f'<line x1="{_LEFT}" y1="{axis_y}" x2="{_WIDTH - 10}" y2="{axis_y}" stroke="#333333"/>'
    )
    ticks = _ticks(horizon)
    for t in ticks:
        parts.append(
            f'<line x1="{x(t):.2f}" y1="{axis_y}" x2="{x(t):.2f}" y2="{axis_y + 4}" '
            f'stroke="#333333"/>'
        )
        parts.append(
            f'<text x="{x(t):.2f}" y="{axis_y + 16}" text-anchor="middle">{_fmt(t)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _label(schedule: Schedule, iv) -> str:
    instance = schedule.instance
    who = "setup" if iv.job_id is None else instance.jobs[iv.job_id].name
    return f"{who} {iv.kind} [{_fmt(iv.start)}, {_fmt(iv.stop)})"


def _ticks(horizon: float) -> list[float]:
    if horizon <= 0:
        return [0.0]
    raw = horizon / 8
    step = 1.0
    for candidate in (1, 2, 5, 10, 20, 25, 50, 100, 200, 500, 1000):
        if raw <= candidate:
            step = float(candidate)
            break
    else:
        step = float(int(raw // 1000 + 1) * 1000)
    out = []
    t = 0.0
    while t <= horizon + 1e-9:
        out.append(t)
        t += step
    return out
