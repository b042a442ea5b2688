"""Dispatching rules over the masked action space.

All rules consider only currently eligible ASSIGN actions and fall back to
NOOP when no job can be dispatched.  Tie-breaking is always by lowest job id,
so every rule is total and deterministic.
"""

from __future__ import annotations

import numpy as np

from ..env import Action, ShopEnv
from ..model import setup_time, total_processing_time, transport_time

RANDOM = "random"
FCFS = "fcfs"
EDD = "edd"
SPT = "spt"
LPT = "lpt"

HEURISTIC_KINDS = (RANDOM, FCFS, EDD, SPT, LPT)


def next_op_total_time(env: ShopEnv, j: int) -> float:
    """Total occupation time of job j's next operation from the live state."""
    job = env.instance.jobs[j]
    js = env.jobs[j]
    op = job.ops[js.next_op]
    t = transport_time(env.instance, js.machine, op.machine_id)
    s = setup_time(
        env.instance.machines[op.machine_id],
        env.machines[op.machine_id].current_setup,
        op.setup,
    )
    return total_processing_time(job.quantity, op.unit_time, t, s)


def heuristic_select(kind: str, env: ShopEnv, rng: np.random.Generator | None = None) -> Action:
    mask = env.eligible_mask()
    if not mask.any():
        raise ValueError("no eligible action (episode is done or deadlocked)")
    candidates = [j for j in range(env.instance.n_jobs) if mask[j]]
    if not candidates:
        return Action.noop()
    if kind == RANDOM:
        if rng is None:
            raise ValueError("random rule needs a seeded generator")
        return Action.assign(int(rng.choice(candidates)))
    if kind == FCFS:
        key = lambda j: (env.jobs[j].buffered_since, j)
    elif kind == EDD:
        key = lambda j: (env.instance.jobs[j].deadline, j)
    elif kind == SPT:
        key = lambda j: (next_op_total_time(env, j), j)
    elif kind == LPT:
        key = lambda j: (-next_op_total_time(env, j), j)
    else:
        raise ValueError(f"unknown heuristic {kind!r}")
    return Action.assign(min(candidates, key=key))


class HeuristicPolicy:
    """Stateless rule policy; RANDOM carries a seeded generator."""

    def __init__(self, kind: str, seed: int | None = 0):
        if kind not in HEURISTIC_KINDS:
            raise ValueError(f"unknown heuristic {kind!r}")
        self.kind = kind
        self._seed = seed
        self._rng = np.random.default_rng(seed)

    def reseed(self, seed: int) -> None:
        self._seed = seed
        self._rng = np.random.default_rng(seed)

    def act(self, env: ShopEnv) -> Action:
        return heuristic_select(self.kind, env, self._rng)

    def __repr__(self) -> str:
        return f"HeuristicPolicy({self.kind!r})"
