"""Independent schedule validation and KPI computation.

The validator replays a schedule purely from its intervals, without touching
the environment, and reports every constraint breach: machine double-booking,
split operations, broken machine sequences, missing transport time, wrong
setups, and buffer overflows.  Deadline misses are KPIs, not violations.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import EPS, DomainError, Instance, setup_time, transport_time
from .schedule import PROCESS, SETUP, TRANSPORT, Kpis, Schedule, ScheduledInterval

OVERLAP = "OVERLAP"
SEQUENCE = "SEQUENCE"
SETUP_MISMATCH = "SETUP_MISMATCH"
BUFFER_OVERFLOW = "BUFFER_OVERFLOW"
TRANSPORT_UNDERRUN = "TRANSPORT_UNDERRUN"
PREEMPTION = "PREEMPTION"


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str
    time: float

    def as_dict(self) -> dict:
        return {"code": self.code, "detail": self.detail, "time": self.time}


def _job_name(instance: Instance, job_id: int | None) -> str:
    return "setup" if job_id is None else instance.jobs[job_id].name


def validate_schedule(instance: Instance, schedule: Schedule) -> list[Violation]:
    """All violations of the model's constraints; an empty list means feasible.

    A partial schedule (from a deadlocked episode) is validated for what it
    contains; completeness is tracked on the schedule itself.
    """
    if schedule.instance is not instance and schedule.instance.name != instance.name:
        raise DomainError("schedule does not reference the given instance")
    out: list[Violation] = []
    out += _check_machine_occupancy(instance, schedule)
    out += _check_operations(instance, schedule)
    out += _check_setups(instance, schedule)
    out += _check_buffers(instance, schedule)
    out.sort(key=lambda v: (v.time, v.code, v.detail))
    return out


def _check_machine_occupancy(instance: Instance, schedule: Schedule) -> list[Violation]:
    out = []
    for k in range(instance.n_machines):
        lane = [
            iv for iv in schedule.machine_lane(k)
            if iv.kind in (PROCESS, SETUP) and iv.stop - iv.start > EPS
        ]
        for prev, cur in zip(lane, lane[1:]):
            if cur.start + EPS < prev.stop:
                out.append(
                    Violation(
                        OVERLAP,
                        f"machine {instance.machines[k].name}: "
                        f"{_job_name(instance, prev.job_id)} [{prev.start:g},{prev.stop:g}) "
                        f"overlaps {_job_name(instance, cur.job_id)} "
                        f"[{cur.start:g},{cur.stop:g})",
                        cur.start,
                    )
                )
    return out


def _process_map(schedule: Schedule) -> dict[tuple[int, int], ScheduledInterval]:
    seen: dict[tuple[int, int], ScheduledInterval] = {}
    for iv in schedule.intervals:
        if iv.kind == PROCESS and iv.job_id is not None:
            seen.setdefault((iv.job_id, iv.op_index), iv)
    return seen


def _check_operations(instance: Instance, schedule: Schedule) -> list[Violation]:
    out = []
    counted: dict[tuple[int, int], int] = {}
    for iv in schedule.intervals:
        if iv.kind != PROCESS or iv.job_id is None:
            continue
        counted[(iv.job_id, iv.op_index)] = counted.get((iv.job_id, iv.op_index), 0) + 1
    for (j, o), count in sorted(counted.items()):
        if count > 1:
            out.append(
                Violation(
                    PREEMPTION,
                    f"{instance.jobs[j].name} op {o} appears {count} times",
                    0.0,
                )
            )
    procs = _process_map(schedule)
    for (j, o), iv in sorted(procs.items()):
        job = instance.jobs[j]
        if not 0 <= o < len(job.ops):
            out.append(Violation(SEQUENCE, f"{job.name} has no op {o}", iv.start))
            continue
        op = job.ops[o]
        if iv.machine_id != op.machine_id:
            out.append(
                Violation(
                    SEQUENCE,
                    f"{job.name} op {o} ran on {instance.machines[iv.machine_id].name}, "
                    f"route says {instance.machines[op.machine_id].name}",
                    iv.start,
                )
            )
        expected = job.quantity * op.unit_time
        if abs((iv.end - iv.proc_start) - expected) > 1e-6:
            out.append(
                Violation(
                    PREEMPTION,
                    f"{job.name} op {o} processed for {iv.end - iv.proc_start:g} min, "
                    f"batch needs {expected:g}",
                    iv.start,
                )
            )
        prev_end = 0.0
        prev_machine = job.start
        if o > 0:
            prev = procs.get((j, o - 1))
            if prev is None:
                out.append(Violation(SEQUENCE, f"{job.name} op {o} has no op {o - 1}", iv.start))
                continue
            prev_end = prev.end
            prev_machine = prev.machine_id
        if iv.transport_start + EPS < prev_end:
            out.append(
                Violation(
                    SEQUENCE,
                    f"{job.name} op {o} dispatched at {iv.transport_start:g} "
                    f"before op {o - 1} finished at {prev_end:g}",
                    iv.transport_start,
                )
            )
        needed = transport_time(instance, prev_machine, op.machine_id)
        if iv.proc_start + EPS < prev_end + needed:
            out.append(
                Violation(
                    TRANSPORT_UNDERRUN,
                    f"{job.name} op {o} starts at {iv.proc_start:g}, "
                    f"but leaves {instance.machines[prev_machine].name} at {prev_end:g} "
                    f"and needs {needed:g} min of transport",
                    iv.proc_start,
                )
            )
    return out


def _check_setups(instance: Instance, schedule: Schedule) -> list[Violation]:
    out = []
    for k, machine in enumerate(instance.machines):
        current = machine.initial_setup
        for iv in schedule.machine_lane(k):
            if iv.kind == SETUP:
                if iv.setup_from is not None and iv.setup_from != current:
                    out.append(
                        Violation(
                            SETUP_MISMATCH,
                            f"{machine.name}: setup declared from {iv.setup_from} "
                            f"but machine is in setup {current}",
                            iv.start,
                        )
                    )
                target = iv.setup_to if iv.setup_to is not None else current
                expected = setup_time(machine, current, target)
                if abs((iv.stop - iv.start) - expected) > 1e-6:
                    out.append(
                        Violation(
                            SETUP_MISMATCH,
                            f"{machine.name}: setup {current}->{target} took "
                            f"{iv.stop - iv.start:g} min, table says {expected:g}",
                            iv.start,
                        )
                    )
                current = target
            elif iv.kind == PROCESS and iv.job_id is not None:
                op_index = iv.op_index
                job = instance.jobs[iv.job_id]
                if op_index is None or not 0 <= op_index < len(job.ops):
                    continue
                required = job.ops[op_index].setup
                if required != current:
                    if setup_time(machine, current, required) <= EPS:
                        current = required  # virtual change, no time needed
                    else:
                        out.append(
                            Violation(
                                SETUP_MISMATCH,
                                f"{machine.name}: {job.name} op {op_index} needs setup "
                                f"{required}, machine is in {current}",
                                iv.start,
                            )
                        )
                        current = required
    return out


def _buffer_events(instance: Instance, schedule: Schedule) -> list[tuple[float, int, int, float]]:
    """(time, phase, buffer, delta) stream; completions apply before dispatches."""
    events: list[tuple[float, int, int, float]] = []
    procs = _process_map(schedule)
    for (j, o), iv in procs.items():
        job = instance.jobs[j]
        op = job.ops[o]
        source = job.start if o == 0 else procs[(j, o - 1)].machine_id if (j, o - 1) in procs else job.start
        if source != op.machine_id:
            events.append((iv.transport_start, 1, source, -op.volume))
            events.append((iv.transport_start, 1, op.machine_id, op.volume))
        if o + 1 < len(job.ops):
            delta = job.ops[o + 1].volume - op.volume
            if delta != 0.0:
                events.append((iv.end, 0, op.machine_id, delta))
        else:
            events.append((iv.end, 0, op.machine_id, -op.volume))
    events.sort(key=lambda e: (e[0], e[1]))
    return events


def replay_buffers(instance: Instance, schedule: Schedule) -> tuple[list[float], list[Violation]]:
    """Reconstructed peak loads per buffer plus any overflow violations."""
    load = [0.0] * instance.n_machines
    for job in instance.jobs:
        load[job.start] += job.ops[0].volume
    peak = list(load)
    out = []
    for time, _, k, delta in _buffer_events(instance, schedule):
        load[k] += delta
        peak[k] = max(peak[k], load[k])
        if load[k] > instance.buffer_capacity(k) + EPS:
            out.append(
                Violation(
                    BUFFER_OVERFLOW,
                    f"buffer at {instance.machines[k].name} holds {load[k]:g} "
                    f"of {instance.buffer_capacity(k):g}",
                    time,
                )
            )
    return peak, out


def _check_buffers(instance: Instance, schedule: Schedule) -> list[Violation]:
    _, out = replay_buffers(instance, schedule)
    return out


def compute_kpis(instance: Instance, schedule: Schedule) -> Kpis:
    """KPIs recomputed from the interval log alone."""
    violations = validate_schedule(instance, schedule)
    if violations:
        raise DomainError(
            "cannot compute KPIs of an infeasible schedule: "
            + "; ".join(f"{v.code}: {v.detail}" for v in violations[:5])
        )
    done_ops: dict[int, int] = {}
    last_end: dict[int, float] = {}
    for iv in schedule.intervals:
        if iv.kind == PROCESS and iv.job_id is not None:
            done_ops[iv.job_id] = done_ops.get(iv.job_id, 0) + 1
            last_end[iv.job_id] = max(last_end.get(iv.job_id, 0.0), iv.end)
    # Makespan and tardiness consider finished jobs only; a deadlocked partial
    # schedule contributes nothing for jobs still mid-route.
    makespan = 0.0
    total_tardiness = 0.0
    tardy = 0
    for j, count in done_ops.items():
        job = instance.jobs[j]
        if count < len(job.ops):
            continue
        makespan = max(makespan, last_end[j])
        late = max(0.0, last_end[j] - job.deadline)
        total_tardiness += late
        if late > EPS:
            tardy += 1
    # Setup and process accumulate separately, in interval order, matching
    # the environment's own counters bit-for-bit.
    busy_setup = [0.0] * instance.n_machines
    busy_process = [0.0] * instance.n_machines
    for iv in schedule.intervals:
        if iv.kind == PROCESS:
            busy_process[iv.machine_id] += iv.stop - iv.start
        elif iv.kind == SETUP:
            busy_setup[iv.machine_id] += iv.stop - iv.start
    peak, _ = replay_buffers(instance, schedule)
    return Kpis(
        makespan=makespan,
        total_tardiness=total_tardiness,
        tardy_jobs=tardy,
        peak_buffer=tuple(peak),
        machine_utilization=tuple(
            0.0 if makespan <= 0 else (busy_setup[k] + busy_process[k]) / makespan
            for k in range(instance.n_machines)
        ),
        setup_time_total=float(sum(busy_setup)),
    )
