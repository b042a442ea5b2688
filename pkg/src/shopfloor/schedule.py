"""Schedule artifacts: timestamped intervals, per-job completions, KPIs."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .model import Instance

SETUP = "setup"
TRANSPORT = "transport"
PROCESS = "process"


@dataclass(frozen=True)
class ScheduledInterval:
    """One segment on a machine lane.

    Every interval carries the full decomposition of its dispatch
    (transport_start <= setup_start <= proc_start <= end); `kind` selects
    which segment this row covers.  Stand-alone setups (no job) have
    job_id None.
    """

    job_id: int | None
    op_index: int | None
    machine_id: int
    kind: str
    transport_start: float
    setup_start: float
    proc_start: float
    end: float
    setup_from: int | None = None
    setup_to: int | None = None

    @property
    def start(self) -> float:
        if self.kind == TRANSPORT:
            return self.transport_start
        if self.kind == SETUP:
            return self.setup_start
        return self.proc_start

    @property
    def stop(self) -> float:
        if self.kind == TRANSPORT:
            return self.setup_start
        if self.kind == SETUP:
            return self.proc_start
        return self.end

    def as_dict(self) -> dict:
        return {
            "job": self.job_id,
            "op": self.op_index,
            "machine": self.machine_id,
            "kind": self.kind,
            "transport_start": self.transport_start,
            "setup_start": self.setup_start,
            "proc_start": self.proc_start,
            "end": self.end,
            "setup_from": self.setup_from,
            "setup_to": self.setup_to,
        }


def interval_from_dict(doc: dict) -> ScheduledInterval:
    return ScheduledInterval(
        job_id=doc.get("job"),
        op_index=doc.get("op"),
        machine_id=int(doc["machine"]),
        kind=str(doc["kind"]),
        transport_start=float(doc["transport_start"]),
        setup_start=float(doc["setup_start"]),
        proc_start=float(doc["proc_start"]),
        end=float(doc["end"]),
        setup_from=doc.get("setup_from"),
        setup_to=doc.get("setup_to"),
    )


@dataclass
class Schedule:
    """The planner-facing artifact: all intervals plus per-job completion times."""

    instance: Instance
    intervals: list[ScheduledInterval] = field(default_factory=list)
    completion: dict[int, float] = field(default_factory=dict)
    complete: bool = False

    def machine_lane(self, machine_id: int) -> list[ScheduledInterval]:
        lane = [iv for iv in self.intervals if iv.machine_id == machine_id]
        lane.sort(key=lambda iv: (iv.start, iv.stop, iv.kind))
        return lane

    def as_dict(self, kpis: "Kpis | None" = None) -> dict:
        from .instances import instance_hash

        doc = {
            "format_version": 1,
            "instance": self.instance.name,
            "instance_hash": instance_hash(self.instance),
            "complete": self.complete,
            "completion": {
                self.instance.jobs[j].name: t for j, t in sorted(self.completion.items())
            },
            "intervals": [iv.as_dict() for iv in self.intervals],
        }
        if kpis is not None:
            doc["kpis"] = kpis.as_dict()
        return doc

    def to_json(self, kpis: "Kpis | None" = None) -> str:
        return json.dumps(self.as_dict(kpis), indent=2, sort_keys=True) + "\n"

    def intervals_csv(self) -> str:
        lines = ["job,op,machine,kind,start,end"]
        for iv in self.intervals:
            job = "" if iv.job_id is None else self.instance.jobs[iv.job_id].name
            op = "" if iv.op_index is None else str(iv.op_index)
            lines.append(
                f"{job},{op},{self.instance.machines[iv.machine_id].name},"
                f"{iv.kind},{iv.start:.6f},{iv.stop:.6f}"
            )
        return "\n".join(lines) + "\n"


def schedule_from_dict(doc: dict, instance: Instance) -> Schedule:
    names = {job.name: job.job_id for job in instance.jobs}
    return Schedule(
        instance=instance,
        intervals=[interval_from_dict(d) for d in doc["intervals"]],
        completion={names[name]: float(t) for name, t in doc.get("completion", {}).items()},
        complete=bool(doc.get("complete", False)),
    )


@dataclass(frozen=True)
class Kpis:
    makespan: float
    total_tardiness: float
    tardy_jobs: int
    peak_buffer: tuple[float, ...]
    machine_utilization: tuple[float, ...]
    setup_time_total: float

    def as_dict(self) -> dict:
        return {
            "makespan": self.makespan,
            "total_tardiness": self.total_tardiness,
            "tardy_jobs": self.tardy_jobs,
            "peak_buffer": list(self.peak_buffer),
            "machine_utilization": list(self.machine_utilization),
            "setup_time_total": self.setup_time_total,
        }
