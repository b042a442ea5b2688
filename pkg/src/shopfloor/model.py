"""Core domain types for the extended job-shop model.

Jobs carry a batch size, a deadline and an ordered machine sequence; every
operation names a machine, a required machine setup, a per-piece machining
time and the volume the job occupies while that operation is pending or
running.  Machines have sequence-dependent setup-time matrices (possibly
asymmetric, possibly zero off-diagonal for virtual setup changes), and each
machine owns exactly one capacity-limited buffer.  Transport times between
machines are charged inside an operation's total time.

All types are immutable after construction and safe to share between
threads.  Times are non-negative real minutes; comparisons use EPS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EPS = 1e-9

NEUTRAL_SETUP = 0


class DomainError(ValueError):
    """Raised for inputs that violate the model's invariants."""


def _check_finite(value: float, what: str) -> float:
    if not math.isfinite(value):
        raise DomainError(f"{what} must be finite, got {value!r}")
    return float(value)


def _check_nonneg(value: float, what: str) -> float:
    value = _check_finite(value, what)
    if value < 0:
        raise DomainError(f"{what} must be >= 0, got {value!r}")
    return value


@dataclass(frozen=True)
class Machine:
    """A machine with a square setup-time matrix; row/column 0 is the neutral setup."""

    machine_id: int
    name: str
    setup_time: tuple[tuple[float, ...], ...]
    initial_setup: int = NEUTRAL_SETUP

    @property
    def setup_count(self) -> int:
        return len(self.setup_time)

    def check(self) -> None:
        n = self.setup_count
        if n < 1:
            raise DomainError(f"machine {self.name}: setup matrix must be at least 1x1")
        for i, row in enumerate(self.setup_time):
            if len(row) != n:
                raise DomainError(f"machine {self.name}: setup matrix is not square")
            for j, entry in enumerate(row):
                _check_nonneg(entry, f"machine {self.name}: setup_time[{i}][{j}]")
            if abs(row[i]) > EPS:
                raise DomainError(
                    f"machine {self.name}: setup_time[{i}][{i}] must be 0, got {row[i]}"
                )
        if not 0 <= self.initial_setup < n:
            raise DomainError(f"machine {self.name}: initial setup {self.initial_setup} out of range")


@dataclass(frozen=True)
class Operation:
    """One processing step: machine, required setup, per-piece time, occupied volume."""

    machine_id: int
    setup: int
    unit_time: float
    volume: float

    def check(self, n_machines: int, machines: tuple[Machine, ...]) -> None:
        if not 0 <= self.machine_id < n_machines:
            raise DomainError(f"operation references unknown machine {self.machine_id}")
        machine = machines[self.machine_id]
        if not 0 <= self.setup < machine.setup_count:
            raise DomainError(
                f"operation setup {self.setup} invalid for machine {machine.name}"
            )
        if _check_finite(self.unit_time, "unit_time") <= 0:
            raise DomainError(f"unit_time must be > 0, got {self.unit_time}")
        _check_nonneg(self.volume, "volume")


@dataclass(frozen=True)
class Job:
    """A job: batch size (quantity factor), deadline, and its fixed machine sequence.

    start_machine is where the job physically sits at time zero; it defaults to
    the first operation's machine and differs only for residual instances
    produced by re-planning mid-episode.
    """

    job_id: int
    name: str
    quantity: int
    deadline: float
    ops: tuple[Operation, ...]
    start_machine: int | None = None

    @property
    def start(self) -> int:
        return self.ops[0].machine_id if self.start_machine is None else self.start_machine

    def check(self, machines: tuple[Machine, ...]) -> None:
        if self.quantity < 1:
            raise DomainError(f"job {self.name}: quantity must be >= 1")
        _check_nonneg(self.deadline, f"job {self.name}: deadline")
        if not self.ops:
            raise DomainError(f"job {self.name}: needs at least one operation")
        for op in self.ops:
            op.check(len(machines), machines)
        if self.start_machine is not None and not 0 <= self.start_machine < len(machines):
            raise DomainError(f"job {self.name}: start machine {self.start_machine} unknown")


@dataclass(frozen=True)
class BufferSpec:
    """Capacity of the storage area in front of one machine, in volume units."""

    machine_id: int
    capacity: float

    def check(self) -> None:
        if _check_finite(self.capacity, "buffer capacity") <= 0:
            raise DomainError(f"buffer capacity must be > 0, got {self.capacity}")


@dataclass(frozen=True)
class Instance:
    """A full problem statement: machines, jobs, buffers and the transport matrix."""

    machines: tuple[Machine, ...]
    jobs: tuple[Job, ...]
    buffers: tuple[BufferSpec, ...]
    transport: tuple[tuple[float, ...], ...]
    name: str = "instance"

    @property
    def n_machines(self) -> int:
        return len(self.machines)

    @property
    def n_jobs(self) -> int:
        return len(self.jobs)

    def buffer_capacity(self, machine_id: int) -> float:
        return self.buffers[machine_id].capacity

    def problems(self) -> list[str]:
        """All invariant breaches, as human-readable messages (empty = valid)."""
        out: list[str] = []
        m = self.n_machines
        if m < 1:
            return ["instance needs at least one machine"]
        for idx, machine in enumerate(self.machines):
            if machine.machine_id != idx:
                out.append(f"machine {machine.name}: id {machine.machine_id} != position {idx}")
            try:
                machine.check()
            except DomainError as err:
                out.append(str(err))
        if len(self.buffers) != m:
            out.append("exactly one buffer per machine required")
        for idx, buf in enumerate(self.buffers[:m]):
            if buf.machine_id != idx:
                out.append(f"buffer at position {idx} references machine {buf.machine_id}")
            try:
                buf.check()
            except DomainError as err:
                out.append(str(err))
        if len(self.transport) != m or any(len(row) != m for row in self.transport):
            out.append(f"transport matrix must be {m}x{m}")
        else:
            for i, row in enumerate(self.transport):
                for j, entry in enumerate(row):
                    try:
                        _check_nonneg(entry, f"transport[{i}][{j}]")
                    except DomainError as err:
                        out.append(str(err))
                if abs(row[i]) > EPS:
                    out.append(f"transport[{i}][{i}] must be 0, got {row[i]}")
        for idx, job in enumerate(self.jobs):
            if job.job_id != idx:
                out.append(f"job {job.name}: id {job.job_id} != position {idx}")
            try:
                job.check(self.machines)
            except DomainError as err:
                out.append(str(err))
        if not out:
            # Initial placement must fit: jobs sit at their start machine's buffer
            # with their first operation's volume before anything moves.
            load = [0.0] * m
            for job in self.jobs:
                load[job.start] += job.ops[0].volume
            for k in range(m):
                if load[k] > self.buffers[k].capacity + EPS:
                    out.append(
                        f"initial volumes at machine {self.machines[k].name} total "
                        f"{load[k]:g}, exceeding buffer capacity {self.buffers[k].capacity:g}"
                    )
        return out

    def validate(self) -> "Instance":
        problems = self.problems()
        if problems:
            raise DomainError("; ".join(problems))
        return self


def total_processing_time(quantity: int, unit_time: float, transport: float, setup: float) -> float:
    """Total time an operation occupies its machine: quantity * unit_time + transport + setup."""
    if quantity < 1:
        raise DomainError(f"quantity must be >= 1, got {quantity}")
    if _check_finite(unit_time, "unit_time") <= 0:
        raise DomainError(f"unit_time must be > 0, got {unit_time}")
    transport = _check_nonneg(transport, "transport time")
    setup = _check_nonneg(setup, "setup time")
    return quantity * unit_time + transport + setup


def setup_time(machine: Machine, from_setup: int, to_setup: int) -> float:
    """Minutes to switch the machine from one setup to another (0 on the diagonal)."""
    n = machine.setup_count
    if not 0 <= from_setup < n:
        raise DomainError(f"setup id {from_setup} invalid for machine {machine.name}")
    if not 0 <= to_setup < n:
        raise DomainError(f"setup id {to_setup} invalid for machine {machine.name}")
    return machine.setup_time[from_setup][to_setup]


def transport_time(instance: Instance, from_machine: int, to_machine: int) -> float:
    """Minutes to move a job between two machines (0 on the diagonal)."""
    m = instance.n_machines
    if not 0 <= from_machine < m:
        raise DomainError(f"machine index {from_machine} out of range")
    if not 0 <= to_machine < m:
        raise DomainError(f"machine index {to_machine} out of range")
    return instance.transport[from_machine][to_machine]


def job_volume_at(job: Job, next_op_index: int) -> float:
    """Volume the job occupies when its next operation is ops[next_op_index].

    At next_op_index == len(ops) the job is finished and has left the shop,
    so it occupies no buffer space.
    """
    if not 0 <= next_op_index <= len(job.ops):
        raise DomainError(
            f"job {job.name}: operation index {next_op_index} out of range 0..{len(job.ops)}"
        )
    if next_op_index == len(job.ops):
        return 0.0
    return job.ops[next_op_index].volume
