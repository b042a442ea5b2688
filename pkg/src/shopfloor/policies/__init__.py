"""Action-selection strategies: dispatching rules, exact search, Q-learning,
policy-gradient training, plus policy serialization."""

from __future__ import annotations

from ..env import Action, ShopEnv
from ..model import DomainError, Instance
from .exact import (
    MAKESPAN,
    TOTAL_TARDINESS,
    ExactPolicy,
    GuardExceeded,
    brute_force_optimal,
    decision_tree_estimate,
)
from .gradient import (
    NeuralPolicy,
    PgHyperparams,
    PgNetwork,
    encode_observation,
    encoding_dims,
    surrogate_loss_and_grad,
    train_pg,
)
from .heuristics import (
    EDD,
    FCFS,
    HEURISTIC_KINDS,
    LPT,
    RANDOM,
    SPT,
    HeuristicPolicy,
    heuristic_select,
)
from .qlearning import QHyperparams, QTablePolicy, train_q
from .store import curve_to_csv, load_policy, policy_from_dict, policy_to_dict, save_policy

GREEDY = "greedy"
SAMPLE = "sample"


def make_policy(kind: str, instance: Instance | None = None, seed: int = 0,
                objective: str = MAKESPAN, node_limit: int = 10_000_000):
    """Build a policy from its CLI/service name."""
    kind = kind.lower()
    if kind in HEURISTIC_KINDS:
        return HeuristicPolicy(kind, seed=seed)
    if kind == "exact":
        if instance is None:
            raise DomainError("exact policy needs the instance up front")
        if decision_tree_estimate(instance) > node_limit * 100:
            raise GuardExceeded(
                f"instance too large for exact search: {instance.n_jobs} jobs x "
                f"{instance.n_machines} machines"
            )
        return ExactPolicy(instance, objective=objective, node_limit=node_limit)
    raise DomainError(f"unknown policy kind {kind!r}")


def policy_act(policy, env: ShopEnv, mode: str = GREEDY, seed: int | None = None) -> Action:
    """Uniform action selection: GREEDY is deterministic, SAMPLE is seeded.

    Policies without a stochastic mode (rules, tables, exact) ignore SAMPLE
    and act deterministically.
    """
    if not env.eligible_mask().any():
        raise DomainError("no eligible action")
    if isinstance(policy, NeuralPolicy):
        previous = policy.mode
        policy.mode = SAMPLE if mode == SAMPLE else GREEDY
        try:
            if mode == SAMPLE and seed is not None:
                policy.reseed(seed)
            return policy.act(env)
        finally:
            policy.mode = previous
    if mode == SAMPLE and seed is not None and hasattr(policy, "reseed"):
        policy.reseed(seed)
    action = policy.act(env)
    if isinstance(action, int):
        action = env.space.action(action)
    return action


__all__ = [
    "Action",
    "EDD",
    "FCFS",
    "GREEDY",
    "HEURISTIC_KINDS",
    "LPT",
    "MAKESPAN",
    "RANDOM",
    "SAMPLE",
    "SPT",
    "TOTAL_TARDINESS",
    "ExactPolicy",
    "GuardExceeded",
    "HeuristicPolicy",
    "NeuralPolicy",
    "PgHyperparams",
    "PgNetwork",
    "QHyperparams",
    "QTablePolicy",
    "brute_force_optimal",
    "curve_to_csv",
    "decision_tree_estimate",
    "encode_observation",
    "encoding_dims",
    "heuristic_select",
    "load_policy",
    "make_policy",
    "policy_act",
    "policy_from_dict",
    "policy_to_dict",
    "save_policy",
    "surrogate_loss_and_grad",
    "train_pg",
    "train_q",
]
