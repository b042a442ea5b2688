"""Deterministic event-driven decision environment for the extended job shop.

The agent acts at decision epochs: ASSIGN dispatches a job to the machine of
its next operation (the machine is then occupied for quantity*unit_time +
transport + setup minutes), PRESETUP reconfigures an idle machine ahead of
time, and NOOP advances the clock to the next completion event.  Buffers are
reserved at the destination the moment a dispatch starts and released from
the source simultaneously, so observed loads can never overflow.

Everything is a pure function of (instance, action sequence): identical runs
produce bit-for-bit identical observations, rewards and schedules.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .model import (
    EPS,
    DomainError,
    Instance,
    job_volume_at,
    setup_time,
    total_processing_time,
    transport_time,
)
from .schedule import PROCESS, SETUP, TRANSPORT, Kpis, Schedule, ScheduledInterval

ASSIGN = "assign"
PRESETUP = "presetup"
NOOP = "noop"


class MaskedActionError(DomainError):
    """An action that is not eligible in the current state."""


@dataclass(frozen=True)
class Action:
    kind: str
    job: int | None = None
    machine: int | None = None
    setup: int | None = None

    @staticmethod
    def assign(job: int) -> "Action":
        return Action(ASSIGN, job=job)

    @staticmethod
    def presetup(machine: int, setup: int) -> "Action":
        return Action(PRESETUP, machine=machine, setup=setup)

    @staticmethod
    def noop() -> "Action":
        return Action(NOOP)

    def as_dict(self) -> dict:
        doc: dict = {"kind": self.kind}
        if self.job is not None:
            doc["job"] = self.job
        if self.machine is not None:
            doc["machine"] = self.machine
        if self.setup is not None:
            doc["setup"] = self.setup
        return doc


def action_from_dict(doc: dict) -> Action:
    return Action(
        kind=str(doc["kind"]),
        job=doc.get("job"),
        machine=doc.get("machine"),
        setup=doc.get("setup"),
    )


class ActionSpace:
    """Flat enumeration: one ASSIGN per job, one NOOP, then optional presetups."""

    def __init__(self, instance: Instance, presetup_enabled: bool = False):
        self.n_jobs = instance.n_jobs
        self.noop_index = instance.n_jobs
        self._actions: list[Action] = [Action.assign(j) for j in range(instance.n_jobs)]
        self._actions.append(Action.noop())
        if presetup_enabled:
            for machine in instance.machines:
                for s in range(machine.setup_count):
                    self._actions.append(Action.presetup(machine.machine_id, s))
        self._index = {a: i for i, a in enumerate(self._actions)}

    @property
    def size(self) -> int:
        return len(self._actions)

    def action(self, index: int) -> Action:
        return self._actions[index]

    def index(self, action: Action) -> int:
        try:
            return self._index[action]
        except KeyError:
            raise MaskedActionError(f"action {action} not in action space") from None


@dataclass(frozen=True)
class RewardConfig:
    """Weights of the dense reward signal.

    Defaults favour short schedules with a strong deadline signal; they are
    tunable artifact choices, not part of the problem statement.
    """

    w_time: float = 1.0
    w_tardy: float = 5.0
    r_complete: float = 10.0
    w_block: float = 2.0
    w_deadlock: float = 1000.0
    gamma: float = 0.99

    def check(self) -> None:
        for name in ("w_time", "w_tardy", "r_complete", "w_block", "w_deadlock", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"reward weight {name} must be finite")
        if not 0.0 <= self.gamma <= 1.0:
            raise DomainError(f"gamma must be in [0, 1], got {self.gamma}")

    @staticmethod
    def makespan_only() -> "RewardConfig":
        return RewardConfig(w_time=1.0, w_tardy=0.0, r_complete=0.0,
                            w_block=0.0, w_deadlock=0.0, gamma=1.0)

    @staticmethod
    def tardiness_only() -> "RewardConfig":
        return RewardConfig(w_time=0.0, w_tardy=1.0, r_complete=0.0,
                            w_block=0.0, w_deadlock=0.0, gamma=1.0)


@dataclass(frozen=True)
class EnvFeatures:
    presetup: bool = False


@dataclass(frozen=True)
class Observation:
    """The three observation matrices: machine info (3 x m), job info (2 x n), buffers (b)."""

    machine_info: np.ndarray
    job_info: np.ndarray
    buffer_info: np.ndarray

    def as_dict(self) -> dict:
        return {
            "machine_info": self.machine_info.tolist(),
            "job_info": self.job_info.tolist(),
            "buffer_info": self.buffer_info.tolist(),
        }

    def equals(self, other: "Observation") -> bool:
        return (
            np.array_equal(self.machine_info, other.machine_info)
            and np.array_equal(self.job_info, other.job_info)
            and np.array_equal(self.buffer_info, other.buffer_info)
        )


@dataclass(frozen=True)
class StepResult:
    observation: Observation
    reward: float
    done: bool
    info: dict


@dataclass
class MachineState:
    current_setup: int
    busy_job: int | None = None
    busy_until: float | None = None
    busy_kind: str | None = None  # "op" or "setup"
    proc_start: float | None = None

    @property
    def idle(self) -> bool:
        return self.busy_until is None


@dataclass
class JobState:
    next_op: int
    machine: int | None
    dispatched: bool = False
    transport_end: float = 0.0
    proc_start: float = 0.0
    completion: float | None = None
    buffered_since: float = 0.0

    @property
    def done(self) -> bool:
        return self.completion is not None

    def location(self, clock: float) -> tuple:
        if self.done:
            return ("done",)
        if self.dispatched:
            if clock + EPS < self.transport_end:
                return ("in_transit", self.machine, self.transport_end)
            return ("on_machine", self.machine)
        return ("in_buffer", self.machine)


class ShopEnv:
    """Single-threaded mutable simulation; share instances, not environments."""

    def __init__(
        self,
        instance: Instance,
        config: RewardConfig | None = None,
        features: EnvFeatures | None = None,
    ):
        instance.validate()
        self.instance = instance
        self.config = config or RewardConfig()
        self.config.check()
        self.features = features or EnvFeatures()
        self.space = ActionSpace(instance, self.features.presetup)
        self.reset()

    # -- lifecycle ----------------------------------------------------------

    def reset(self) -> Observation:
        inst = self.instance
        self.clock = 0.0
        self.machines = [MachineState(current_setup=m.initial_setup) for m in inst.machines]
        self.jobs = [JobState(next_op=0, machine=job.start) for job in inst.jobs]
        self.buffer_load = [0.0] * inst.n_machines
        for job in inst.jobs:
            self.buffer_load[job.start] += job.ops[0].volume
        for k, load in enumerate(self.buffer_load):
            if load > inst.buffer_capacity(k) + EPS:
                raise DomainError(
                    f"initial volumes overflow buffer {k}: {load:g} > {inst.buffer_capacity(k):g}"
                )
        self.events: list[tuple[float, int, str, int]] = []
        self._event_seq = 0
        self.done = inst.n_jobs == 0
        self.deadlock = False
        self.steps = 0
        # KPI counters, kept independent of the interval log on purpose.
        self.peak_buffer = list(self.buffer_load)
        self.busy_setup = [0.0] * inst.n_machines
        self.busy_process = [0.0] * inst.n_machines
        self.tardiness_total = 0.0
        self.tardy_jobs = 0
        self.makespan = 0.0
        self._intervals: list[ScheduledInterval] = []
        self._completion: dict[int, float] = {}
        return self.observe()

    def clone(self) -> "ShopEnv":
        other = ShopEnv.__new__(ShopEnv)
        other.instance = self.instance
        other.config = self.config
        other.features = self.features
        other.space = self.space
        other.clock = self.clock
        other.machines = [replace(m) for m in self.machines]
        other.jobs = [replace(j) for j in self.jobs]
        other.buffer_load = list(self.buffer_load)
        other.events = list(self.events)
        other._event_seq = self._event_seq
        other.done = self.done
        other.deadlock = self.deadlock
        other.steps = self.steps
        other.peak_buffer = list(self.peak_buffer)
        other.busy_setup = list(self.busy_setup)
        other.busy_process = list(self.busy_process)
        other.tardiness_total = self.tardiness_total
        other.tardy_jobs = self.tardy_jobs
        other.makespan = self.makespan
        other._intervals = list(self._intervals)
        other._completion = dict(self._completion)
        return other

    # -- eligibility --------------------------------------------------------

    def _assign_eligible(self, j: int) -> bool:
        js = self.jobs[j]
        if js.done or js.dispatched:
            return False
        op = self.instance.jobs[j].ops[js.next_op]
        ms = self.machines[op.machine_id]
        if not ms.idle:
            return False
        if op.machine_id == js.machine:
            return True  # already occupies the destination buffer
        free = self.instance.buffer_capacity(op.machine_id) - self.buffer_load[op.machine_id]
        return free + EPS >= op.volume

    def eligible_mask(self) -> np.ndarray:
        mask = np.zeros(self.space.size, dtype=bool)
        if self.done:
            return mask
        for j in range(self.instance.n_jobs):
            mask[j] = self._assign_eligible(j)
        mask[self.space.noop_index] = bool(self.events)
        if self.features.presetup:
            for i in range(self.space.noop_index + 1, self.space.size):
                action = self.space.action(i)
                ms = self.machines[action.machine]
                mask[i] = ms.idle and action.setup != ms.current_setup
        return mask

    def eligible_actions(self) -> list[Action]:
        return [self.space.action(i) for i in np.flatnonzero(self.eligible_mask())]

    # -- stepping -----------------------------------------------------------

    def step(self, action: Action | int) -> StepResult:
        if isinstance(action, (int, np.integer)):
            action = self.space.action(int(action))
        if self.done:
            raise MaskedActionError("episode is done")
        if action.kind == ASSIGN:
            reward, fired = self._do_assign(action.job), []
        elif action.kind == PRESETUP:
            reward, fired = self._do_presetup(action.machine, action.setup), []
        elif action.kind == NOOP:
            reward, fired = self._do_noop()
        else:
            raise MaskedActionError(f"unknown action kind {action.kind!r}")

        if not self.done and not self.events and not self.eligible_mask().any():
            # Nothing can move and nothing is pending: the shop is deadlocked.
            self.done = True
            self.deadlock = True
            reward -= self.config.w_deadlock
        self.steps += 1
        mask = self.eligible_mask()
        return StepResult(
            observation=self.observe(),
            reward=reward,
            done=self.done,
            info={"events": fired, "mask": mask, "deadlock": self.deadlock},
        )

    def _do_assign(self, j: int) -> float:
        if j is None or not 0 <= j < self.instance.n_jobs or not self._assign_eligible(j):
            raise MaskedActionError(f"assign({j}) is not eligible")
        job = self.instance.jobs[j]
        js = self.jobs[j]
        op = job.ops[js.next_op]
        mu = op.machine_id
        ms = self.machines[mu]
        source = js.machine
        t = transport_time(self.instance, source, mu)
        s = setup_time(self.instance.machines[mu], ms.current_setup, op.setup)
        total = total_processing_time(job.quantity, op.unit_time, t, s)

        self._move_volume(source, mu, op.volume)
        setup_from = ms.current_setup
        setup_start = self.clock + t
        proc_start = self.clock + t + s
        end = self.clock + total
        ms.current_setup = op.setup
        ms.busy_job = j
        ms.busy_kind = "op"
        ms.busy_until = end
        ms.proc_start = proc_start
        js.machine = mu
        js.dispatched = True
        js.transport_end = setup_start
        js.proc_start = proc_start
        self._push_event(end, "op_done", j)

        # Accumulate from the same arithmetic the intervals carry, so KPI
        # recomputation from the interval log matches bit-for-bit.
        self.busy_setup[mu] += proc_start - setup_start
        self.busy_process[mu] += end - proc_start
        base = dict(
            job_id=j,
            op_index=js.next_op,
            machine_id=mu,
            transport_start=self.clock,
            setup_start=setup_start,
            proc_start=proc_start,
            end=end,
        )
        if t > EPS:
            self._intervals.append(ScheduledInterval(kind=TRANSPORT, **base))
        if s > EPS:
            self._intervals.append(
                ScheduledInterval(kind=SETUP, setup_from=setup_from, setup_to=op.setup, **base)
            )
        self._intervals.append(ScheduledInterval(kind=PROCESS, **base))
        return 0.0

    def _do_presetup(self, machine: int, setup: int) -> float:
        if not self.features.presetup:
            raise MaskedActionError("presetup feature is disabled")
        if machine is None or not 0 <= machine < self.instance.n_machines:
            raise MaskedActionError(f"presetup machine {machine} unknown")
        ms = self.machines[machine]
        if not ms.idle or setup == ms.current_setup:
            raise MaskedActionError(f"presetup({machine}, {setup}) is not eligible")
        duration = setup_time(self.instance.machines[machine], ms.current_setup, setup)
        setup_from = ms.current_setup
        ms.current_setup = setup
        if duration <= EPS:
            return 0.0  # virtual change, applied instantly
        until = self.clock + duration
        ms.busy_kind = "setup"
        ms.busy_until = until
        self._push_event(until, "setup_done", machine)
        self.busy_setup[machine] += until - self.clock
        self._intervals.append(
            ScheduledInterval(
                job_id=None,
                op_index=None,
                machine_id=machine,
                kind=SETUP,
                transport_start=self.clock,
                setup_start=self.clock,
                proc_start=until,
                end=until,
                setup_from=setup_from,
                setup_to=setup,
            )
        )
        return 0.0

    def _do_noop(self) -> tuple[float, list[dict]]:
        if not self.events:
            raise MaskedActionError("noop with empty event queue")
        target = self.events[0][0]
        delta = target - self.clock
        blocked = self._blocked_jobs()
        reward = -self.config.w_time * delta
        reward -= self.config.w_block * len(blocked) * delta
        self.clock = target
        fired: list[dict] = []
        while self.events and self.events[0][0] <= self.clock + EPS:
            _, _, kind, idx = heapq.heappop(self.events)
            if kind == "op_done":
                reward += self._finish_op(idx)
                fired.append({"event": "op_done", "job": idx, "time": self.clock})
            else:
                self.machines[idx].busy_kind = None
                self.machines[idx].busy_until = None
                fired.append({"event": "setup_done", "machine": idx, "time": self.clock})
        if all(js.done for js in self.jobs):
            self.done = True
        return reward, fired

    def _finish_op(self, j: int) -> float:
        job = self.instance.jobs[j]
        js = self.jobs[j]
        mu = js.machine
        ms = self.machines[mu]
        old_volume = job.ops[js.next_op].volume
        ms.busy_job = None
        ms.busy_kind = None
        ms.busy_until = None
        ms.proc_start = None
        js.dispatched = False
        js.next_op += 1
        reward = 0.0
        if js.next_op == len(job.ops):
            js.completion = self.clock
            js.machine = None
            self._change_load(mu, -old_volume)
            self._completion[j] = self.clock
            self.makespan = max(self.makespan, self.clock)
            tardiness = max(0.0, self.clock - job.deadline)
            self.tardiness_total += tardiness
            if tardiness > EPS:
                self.tardy_jobs += 1
            reward += self.config.r_complete
            reward -= self.config.w_tardy * tardiness
        else:
            new_volume = job_volume_at(job, js.next_op)
            self._change_load(mu, new_volume - old_volume)
            js.buffered_since = self.clock
        return reward

    def _blocked_jobs(self) -> list[int]:
        """Jobs stuck after an operation because the next buffer cannot take them."""
        out = []
        for j, js in enumerate(self.jobs):
            if js.done or js.dispatched or js.next_op == 0:
                continue
            op = self.instance.jobs[j].ops[js.next_op]
            if op.machine_id == js.machine:
                continue
            free = self.instance.buffer_capacity(op.machine_id) - self.buffer_load[op.machine_id]
            if free + EPS < op.volume:
                out.append(j)
        return out

    def _move_volume(self, source: int, dest: int, volume: float) -> None:
        if source == dest:
            return
        self._change_load(source, -volume)
        self._change_load(dest, volume)

    def _change_load(self, k: int, delta: float) -> None:
        self.buffer_load[k] += delta
        if self.buffer_load[k] > self.peak_buffer[k]:
            self.peak_buffer[k] = self.buffer_load[k]
        if self.buffer_load[k] > self.instance.buffer_capacity(k) + EPS:
            raise DomainError(
                f"buffer {k} overflow: {self.buffer_load[k]:g} > "
                f"{self.instance.buffer_capacity(k):g}"
            )

    def _push_event(self, time: float, kind: str, idx: int) -> None:
        heapq.heappush(self.events, (time, self._event_seq, kind, idx))
        self._event_seq += 1

    # -- views --------------------------------------------------------------

    def observe(self) -> Observation:
        inst = self.instance
        m, n = inst.n_machines, inst.n_jobs
        machine_info = np.zeros((3, m))
        for k, ms in enumerate(self.machines):
            # Rows 1-2 report the job physically under way; a machine waiting
            # for transport or still being set up shows zeros while row 3
            # already carries the setup committed at dispatch.
            if ms.busy_kind == "op" and self.clock + EPS >= ms.proc_start:
                machine_info[0, k] = ms.busy_job + 1
                machine_info[1, k] = ms.busy_until - self.clock
            machine_info[2, k] = ms.current_setup
        job_info = np.zeros((2, n))
        for j, js in enumerate(self.jobs):
            job_info[0, j] = job_volume_at(inst.jobs[j], js.next_op)
            job_info[1, j] = inst.jobs[j].deadline - self.clock
        buffer_info = np.array(self.buffer_load, dtype=float)
        return Observation(machine_info=machine_info, job_info=job_info, buffer_info=buffer_info)

    def canonical_key(self) -> tuple:
        """Clock-shift-invariant state fingerprint for search and tabular learning."""
        machines = tuple(
            (
                ms.current_setup,
                -1 if ms.busy_job is None else ms.busy_job,
                ms.busy_kind or "",
                0.0 if ms.busy_until is None else round(ms.busy_until - self.clock, 9),
            )
            for ms in self.machines
        )
        jobs = tuple(
            (js.next_op, -1 if js.machine is None else js.machine, js.dispatched)
            for js in self.jobs
        )
        loads = tuple(round(x, 6) for x in self.buffer_load)
        return (jobs, machines, loads)

    def schedule(self) -> Schedule:
        return Schedule(
            instance=self.instance,
            intervals=list(self._intervals),
            completion=dict(self._completion),
            complete=all(js.done for js in self.jobs),
        )

    def kpis(self) -> Kpis:
        makespan = self.makespan
        util = tuple(
            0.0 if makespan <= 0 else (self.busy_setup[k] + self.busy_process[k]) / makespan
            for k in range(self.instance.n_machines)
        )
        return Kpis(
            makespan=makespan,
            total_tardiness=self.tardiness_total,
            tardy_jobs=self.tardy_jobs,
            peak_buffer=tuple(self.peak_buffer),
            machine_utilization=util,
            setup_time_total=float(sum(self.busy_setup)),
        )


# ---------------------------------------------------------------------------
# Rollouts and trajectory logs.


@dataclass
class RolloutResult:
    schedule: Schedule
    trajectory: list[dict]
    kpis: Kpis
    rewards: list[float]
    total_reward: float
    deadlock: bool

    def discounted_return(self, gamma: float) -> float:
        return float(sum(r * gamma**t for t, r in enumerate(self.rewards)))


def rollout(
    instance: Instance,
    policy,
    config: RewardConfig | None = None,
    features: EnvFeatures | None = None,
    seed: int | None = None,
    max_steps: int = 100_000,
    record_observations: bool = True,
) -> RolloutResult:
    """Run a policy to completion; deterministic given (instance, policy, seed)."""
    env = ShopEnv(instance, config=config, features=features)
    if seed is not None and hasattr(policy, "reseed"):
        policy.reseed(seed)
    obs = env.observe()
    trajectory: list[dict] = []
    rewards: list[float] = []
    while not env.done:
        if env.steps >= max_steps:
            raise DomainError(f"rollout exceeded {max_steps} steps without terminating")
        action = policy.act(env)
        if isinstance(action, (int, np.integer)):
            action = env.space.action(int(action))
        clock_before = env.clock
        try:
            result = env.step(action)
        except MaskedActionError as err:
            raise DomainError(
                f"policy {policy!r} returned ineligible action {action} "
                f"at clock {clock_before:g}: {err}"
            ) from err
        record = {
            "step": len(trajectory),
            "clock": clock_before,
            "action": action.as_dict(),
            "reward": result.reward,
        }
        if record_observations:
            record["observation"] = obs.as_dict()
        trajectory.append(record)
        rewards.append(result.reward)
        obs = result.observation
    return RolloutResult(
        schedule=env.schedule(),
        trajectory=trajectory,
        kpis=env.kpis(),
        rewards=rewards,
        total_reward=float(sum(rewards)),
        deadlock=env.deadlock,
    )


def trajectory_to_jsonl(trajectory: list[dict]) -> str:
    return "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in trajectory)


def replay_trajectory(
    instance: Instance,
    jsonl: str,
    config: RewardConfig | None = None,
    features: EnvFeatures | None = None,
) -> list[str]:
    """Re-execute a logged action sequence; returns mismatch descriptions (empty = exact)."""
    problems: list[str] = []
    env = ShopEnv(instance, config=config, features=features)
    obs = env.observe()
    for line_no, line in enumerate(jsonl.splitlines()):
        if not line.strip():
            continue
        rec = json.loads(line)
        expected = json.dumps(rec.get("observation"), sort_keys=True)
        actual = json.dumps(obs.as_dict(), sort_keys=True)
        if rec.get("observation") is not None and expected != actual:
            problems.append(f"step {rec['step']}: observation mismatch")
        if abs(rec["clock"] - env.clock) > EPS:
            problems.append(f"step {rec['step']}: clock {env.clock} != logged {rec['clock']}")
        result = env.step(action_from_dict(rec["action"]))
        if abs(result.reward - rec["reward"]) > EPS:
            problems.append(f"step {rec['step']}: reward {result.reward} != {rec['reward']}")
        obs = result.observation
        if problems and len(problems) > 20:
            problems.append(f"... stopped after line {line_no}")
            break
    return problems
