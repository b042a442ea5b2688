"""Exhaustive optimal scheduling for small instances.

Depth-first search over decision epochs, branching on every eligible action.
States are memoized under a clock-shift-invariant key, which collapses the
factorially many interleavings that reach the same configuration; for the
makespan objective the optimal remaining time is a function of that key
alone, for tardiness the absolute clock joins the key.
"""

from __future__ import annotations

import math
import time as _time

from ..env import RewardConfig, ShopEnv
from ..model import DomainError, Instance
from ..schedule import Kpis, Schedule

MAKESPAN = "makespan"
TOTAL_TARDINESS = "total_tardiness"


class GuardExceeded(RuntimeError):
    """Search aborted: node limit or time budget hit."""


def _objective_config(objective: str) -> RewardConfig:
    if objective == MAKESPAN:
        return RewardConfig.makespan_only()
    if objective == TOTAL_TARDINESS:
        return RewardConfig.tardiness_only()
    raise DomainError(f"unknown objective {objective!r}")


class _Search:
    def __init__(self, instance: Instance, objective: str, node_limit: int,
                 time_budget: float | None):
        self.instance = instance
        self.objective = objective
        self.node_limit = node_limit
        self.deadline = None if time_budget is None else _time.monotonic() + time_budget
        self.memo: dict[tuple, tuple[float, int | None]] = {}
        self.nodes = 0

    def key(self, env: ShopEnv) -> tuple:
        base = env.canonical_key()
        if self.objective == TOTAL_TARDINESS:
            return base + (round(env.clock, 9),)
        return base

    def best_from(self, env: ShopEnv) -> float:
        if env.done:
            return 0.0 if not env.deadlock else math.inf
        key = self.key(env)
        hit = self.memo.get(key)
        if hit is not None:
            return hit[0]
        self.nodes += 1
        if self.nodes > self.node_limit:
            raise GuardExceeded(
                f"instance too large for exact search (node limit {self.node_limit})"
            )
        if self.deadline is not None and self.nodes % 512 == 0:
            if _time.monotonic() > self.deadline:
                raise GuardExceeded("exact search time budget exceeded")
        best = math.inf
        best_action: int | None = None
        mask = env.eligible_mask()
        for index in range(env.space.size):
            if not mask[index]:
                continue
            child = env.clone()
            result = child.step(index)
            # With a single-objective reward config the step reward is exactly
            # the negated incremental cost.
            cost = -result.reward + self.best_from(child)
            if cost < best:
                best = cost
                best_action = index
        self.memo[key] = (best, best_action)
        return best


def brute_force_optimal(
    instance: Instance,
    objective: str = MAKESPAN,
    node_limit: int = 10_000_000,
    time_budget: float | None = None,
) -> tuple[Schedule, float, Kpis]:
    """Provably optimal schedule for the objective, plus its value and KPIs."""
    config = _objective_config(objective)
    search = _Search(instance, objective, node_limit, time_budget)
    root = ShopEnv(instance, config=config)
    value = search.best_from(root)
    if math.isinf(value):
        raise DomainError("no feasible schedule exists (every branch deadlocks)")

    env = ShopEnv(instance, config=config)
    while not env.done:
        entry = search.memo.get(search.key(env))
        if entry is None or entry[1] is None:
            raise DomainError("exact search bookkeeping lost a state during replay")
        env.step(entry[1])
    return env.schedule(), value, env.kpis()


def decision_tree_estimate(instance: Instance) -> float:
    """Coarse (n!)^m upper bound on distinct schedules, used as a pre-guard."""
    n = instance.n_jobs
    m = instance.n_machines
    try:
        return float(math.factorial(n)) ** m
    except OverflowError:
        return math.inf


class ExactPolicy:
    """Replays the optimal action sequence found by the search."""

    def __init__(self, instance: Instance, objective: str = MAKESPAN,
                 node_limit: int = 10_000_000, time_budget: float | None = None):
        self.instance = instance
        self.objective = objective
        self._search = _Search(instance, objective, node_limit, time_budget)
        root = ShopEnv(instance, config=_objective_config(objective))
        self.optimal_value = self._search.best_from(root)
        if math.isinf(self.optimal_value):
            raise DomainError("no feasible schedule exists (every branch deadlocks)")

    def act(self, env: ShopEnv):
        entry = self._search.memo.get(self._search.key(env))
        if entry is None or entry[1] is None:
            raise DomainError("state not covered by exact search (different instance?)")
        return env.space.action(entry[1])

    def __repr__(self) -> str:
        return f"ExactPolicy({self.objective!r})"
