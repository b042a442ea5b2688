from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from shopfloor.env import Action, RewardConfig, ShopEnv, rollout
from shopfloor.evaluation import (
    BUFFER_OVERFLOW,
    OVERLAP,
    PREEMPTION,
    SEQUENCE,
    SETUP_MISMATCH,
    TRANSPORT_UNDERRUN,
    compute_kpis,
    validate_schedule,
)
from shopfloor.gantt import render_gantt
from shopfloor.instances import GenSpec, generate_instance
from shopfloor.model import DomainError
from shopfloor.policies import HeuristicPolicy
from shopfloor.schedule import PROCESS, Schedule

GOLDEN = Path(__file__).parent / "golden"


def paper_trace_schedule(paper):
    """The worked-example prefix: J3 on M1 [0,29], J3 to M2, J1 on M1 [29,53]."""
    env = ShopEnv(paper)
    env.step(Action.assign(2))
    env.step(Action.noop())
    env.step(Action.assign(2))
    env.step(Action.assign(0))
    while not env.done:
        eligible = np.flatnonzero(env.eligible_mask())
        env.step(int(eligible[0]))
    return env.schedule()


def shift_process(schedule, job_id, op_index, delta):
    intervals = []
    for iv in schedule.intervals:
        if iv.job_id == job_id and iv.op_index == op_index:
            intervals.append(replace(
                iv,
                transport_start=iv.transport_start + delta,
                setup_start=iv.setup_start + delta,
                proc_start=iv.proc_start + delta,
                end=iv.end + delta,
            ))
        else:
            intervals.append(iv)
    return Schedule(instance=schedule.instance, intervals=intervals,
                    completion=dict(schedule.completion), complete=schedule.complete)


class TestValidatorOnCleanSchedules:
    @pytest.mark.parametrize("kind", ["fcfs", "edd", "spt", "lpt", "random"])
    def test_env_schedules_validate_clean(self, paper, kind):
        result = rollout(paper, HeuristicPolicy(kind, seed=3))
        assert validate_schedule(paper, result.schedule) == []

    @pytest.mark.parametrize("seed", range(40))
    def test_generated_rollouts_validate_clean(self, seed):
        instance = generate_instance(
            GenSpec(seed=seed, n_jobs=2 + seed % 4, n_machines=2 + (seed // 4) % 4)
        )
        result = rollout(instance, HeuristicPolicy("random", seed=seed))
        assert validate_schedule(instance, result.schedule) == []

    def test_empty_schedule_of_empty_instance(self, paper):
        empty = replace(paper, jobs=(), machines=paper.machines[:1],
                        buffers=paper.buffers[:1], transport=((0.0,),))
        schedule = Schedule(instance=empty, complete=True)
        assert validate_schedule(empty, schedule) == []

    def test_paper_trace_contains_expected_intervals(self, paper):
        schedule = paper_trace_schedule(paper)
        spans = [
            (iv.job_id, iv.machine_id, iv.proc_start, iv.end)
            for iv in schedule.intervals
            if iv.kind == PROCESS and iv.machine_id == 0
        ]
        assert (2, 0, 4.0, 29.0) in spans
        j1 = [s for s in spans if s[0] == 0][0]
        assert j1[2] == pytest.approx(37.0, abs=1e-9)  # 29 + 8 setup
        assert j1[3] == pytest.approx(53.0, abs=1e-9)


class TestMutationSensitivity:
    def test_overlap_detected(self, paper):
        schedule = paper_trace_schedule(paper)
        mutated = shift_process(schedule, 0, 0, -20.0)  # J1's M1 op into J3's
        codes = {v.code for v in validate_schedule(paper, mutated)}
        assert OVERLAP in codes

    def test_sequence_violation_detected(self, paper):
        schedule = paper_trace_schedule(paper)
        # second op of J3 dispatched before its first completes
        mutated = shift_process(schedule, 2, 1, -15.0)
        codes = {v.code for v in validate_schedule(paper, mutated)}
        assert SEQUENCE in codes

    def test_transport_underrun_detected(self, paper):
        schedule = paper_trace_schedule(paper)
        intervals = []
        for iv in schedule.intervals:
            if iv.job_id == 2 and iv.op_index == 1:
                # J3 leaves M1 at 29 and needs 10 min of transport to M2, but
                # we start its processing at 35 (setup kept at 8 min so only
                # the transport check can fire).
                intervals.append(replace(iv, setup_start=27.0, proc_start=35.0, end=51.0))
            else:
                intervals.append(iv)
        mutated = Schedule(instance=paper, intervals=intervals,
                           completion=dict(schedule.completion), complete=True)
        codes = {v.code for v in validate_schedule(paper, mutated)}
        assert TRANSPORT_UNDERRUN in codes

    def test_setup_mismatch_detected(self, paper):
        schedule = paper_trace_schedule(paper)
        intervals = [iv for iv in schedule.intervals
                     if not (iv.kind == "setup" and iv.job_id == 0 and iv.op_index == 0)]
        # J1's 8-minute setup on M1 removed but timing unchanged: its process
        # runs under J3's setup s3 instead of the required s1.
        mutated = Schedule(instance=paper, intervals=intervals,
                           completion=dict(schedule.completion), complete=True)
        codes = {v.code for v in validate_schedule(paper, mutated)}
        assert SETUP_MISMATCH in codes

    def test_wrong_setup_duration_detected(self, paper):
        schedule = paper_trace_schedule(paper)
        intervals = []
        for iv in schedule.intervals:
            if iv.kind == "setup" and iv.job_id == 2 and iv.op_index == 0:
                intervals.append(replace(iv, proc_start=iv.setup_start + 1.0))
            else:
                intervals.append(iv)
        mutated = Schedule(instance=paper, intervals=intervals,
                           completion=dict(schedule.completion), complete=True)
        codes = {v.code for v in validate_schedule(paper, mutated)}
        assert SETUP_MISMATCH in codes

    def test_preemption_detected(self, paper):
        schedule = paper_trace_schedule(paper)
        target = next(iv for iv in schedule.intervals
                      if iv.kind == PROCESS and iv.job_id == 2 and iv.op_index == 0)
        split_a = replace(target, end=target.end - 10.0)
        split_b = replace(target, proc_start=target.end - 10.0)
        intervals = [iv for iv in schedule.intervals if iv is not target]
        intervals += [split_a, split_b]
        mutated = Schedule(instance=paper, intervals=intervals,
                           completion=dict(schedule.completion), complete=True)
        codes = {v.code for v in validate_schedule(paper, mutated)}
        assert PREEMPTION in codes

    def test_buffer_overflow_detected(self, paper):
        schedule = paper_trace_schedule(paper)
        # Move J1's dispatch to M2 early enough that J1 (20) and J3 (15)
        # overlap in buffer 2 with J2's visit... buffer 2 holds 43, so force
        # an overflow by relocating J2's last op into the same window too.
        # Simpler: shrink the buffer in a copied instance.
        small = replace(
            paper,
            buffers=(paper.buffers[0], replace(paper.buffers[1], capacity=14.0),
                     paper.buffers[2]),
        )
        rebound = Schedule(instance=small, intervals=list(schedule.intervals),
                           completion=dict(schedule.completion), complete=True)
        codes = {v.code for v in validate_schedule(small, rebound)}
        assert BUFFER_OVERFLOW in codes

    def test_every_code_has_a_trigger(self):
        # meta-check: the five tests above cover all six codes
        covered = {OVERLAP, SEQUENCE, SETUP_MISMATCH, BUFFER_OVERFLOW,
                   TRANSPORT_UNDERRUN, PREEMPTION}
        assert len(covered) == 6


class TestKpis:
    def test_kpis_match_environment_counters_exactly(self, paper):
        for kind in ("fcfs", "edd", "spt", "lpt"):
            result = rollout(paper, HeuristicPolicy(kind))
            recomputed = compute_kpis(paper, result.schedule)
            assert recomputed == result.kpis

    @pytest.mark.parametrize("seed", range(15))
    def test_kpis_match_on_generated_instances(self, seed):
        instance = generate_instance(GenSpec(seed=seed, n_jobs=3, n_machines=3))
        result = rollout(instance, HeuristicPolicy("random", seed=seed))
        assert compute_kpis(instance, result.schedule) == result.kpis

    def test_paper_trace_makespan_so_far(self, paper):
        env = ShopEnv(paper)
        env.step(Action.assign(2))
        env.step(Action.noop())
        env.step(Action.assign(2))
        env.step(Action.assign(0))
        env.step(Action.noop())  # J1 completes its first op at 53
        assert env.clock == pytest.approx(53.0, abs=1e-9)

    def test_single_machine_kpis(self):
        instance = generate_instance(GenSpec(seed=4, n_jobs=1, n_machines=1))
        result = rollout(instance, HeuristicPolicy("fcfs"))
        job = instance.jobs[0]
        op = job.ops[0]
        setup = instance.machines[0].setup_time[0][op.setup]
        expected = job.quantity * op.unit_time + setup
        assert result.kpis.makespan == pytest.approx(expected, abs=1e-9)
        assert result.kpis.total_tardiness == 0.0

    def test_invalid_schedule_rejected(self, paper):
        schedule = paper_trace_schedule(paper)
        mutated = shift_process(schedule, 0, 0, -20.0)
        with pytest.raises(DomainError, match="infeasible"):
            compute_kpis(paper, mutated)


class TestGantt:
    def test_text_lane_shows_setup_then_process(self, paper):
        env = ShopEnv(paper)
        env.step(Action.assign(2))
        env.step(Action.noop())
        text = render_gantt(env.schedule(), "text")
        lane = [line for line in text.splitlines() if line.startswith("M1:")][0]
        assert "[0,4) setup J3" in lane
        assert "[4,29) process J3" in lane

    def test_empty_schedule_renders(self, paper):
        empty = Schedule(instance=paper)
        assert render_gantt(empty, "svg").startswith("<svg")
        assert render_gantt(empty, "text").strip()

    def test_svg_is_deterministic(self, paper):
        a = render_gantt(rollout(paper, HeuristicPolicy("edd")).schedule, "svg")
        b = render_gantt(rollout(paper, HeuristicPolicy("edd")).schedule, "svg")
        assert a == b

    def test_golden_svg(self, paper):
        rendered = render_gantt(rollout(paper, HeuristicPolicy("edd")).schedule, "svg")
        golden = GOLDEN / "paper3x3_edd.svg"
        assert rendered == golden.read_text()

    def test_unknown_format_rejected(self, paper):
        with pytest.raises(ValueError):
            render_gantt(Schedule(instance=paper), "png")
