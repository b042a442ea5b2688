"""Tabular Q-learning over canonical states and masked actions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..env import Action, RewardConfig, ShopEnv
from ..model import DomainError, Instance


@dataclass(frozen=True)
class QHyperparams:
    alpha: float = 0.2
    gamma: float = 1.0
    epsilon_initial: float = 1.0
    epsilon_final: float = 0.02
    epsilon_decay: float = 0.995
    episodes: int = 2000
    seed: int = 0
    max_states: int = 2_000_000

    def check(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"alpha must be in (0, 1], got {self.alpha}")
        if not 0.0 <= self.gamma <= 1.0:
            raise DomainError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.episodes < 1:
            raise DomainError("episodes must be >= 1")


class QTablePolicy:
    """Greedy policy over a learned table; unseen states fall back to the
    lowest eligible action index, and ties always resolve to the lowest index."""

    def __init__(self, table: dict[tuple, np.ndarray], action_size: int,
                 instance_name: str = ""):
        self.table = table
        self.action_size = action_size
        self.instance_name = instance_name

    def act(self, env: ShopEnv) -> Action:
        mask = env.eligible_mask()
        if not mask.any():
            raise DomainError("no eligible action")
        values = self.table.get(env.canonical_key())
        eligible = np.flatnonzero(mask)
        if values is None:
            return env.space.action(int(eligible[0]))
        best = eligible[np.argmax(values[eligible])]
        return env.space.action(int(best))

    def __repr__(self) -> str:
        return f"QTablePolicy(states={len(self.table)})"


@dataclass
class QTrainingResult:
    policy: QTablePolicy
    curve: list[tuple[int, float, float]]  # (episode, return, makespan)


def train_q(
    instance: Instance,
    hp: QHyperparams | None = None,
    config: RewardConfig | None = None,
) -> QTrainingResult:
    """Epsilon-greedy Q-learning; the reward defaults to pure time penalty so
    a greedy optimum is a makespan optimum."""
    hp = hp or QHyperparams()
    hp.check()
    config = config or RewardConfig.makespan_only()
    rng = np.random.default_rng(hp.seed)
    env = ShopEnv(instance, config=config)
    table: dict[tuple, np.ndarray] = {}
    curve: list[tuple[int, float, float]] = []

    def q_values(key: tuple) -> np.ndarray:
        values = table.get(key)
        if values is None:
            if len(table) >= hp.max_states:
                raise DomainError(
                    f"state table exceeded the {hp.max_states}-state guard"
                )
            values = np.zeros(env.space.size)
            table[key] = values
        return values

    epsilon = hp.epsilon_initial
    for episode in range(hp.episodes):
        env.reset()
        total = 0.0
        while not env.done:
            mask = env.eligible_mask()
            eligible = np.flatnonzero(mask)
            key = env.canonical_key()
            values = q_values(key)
            if rng.random() < epsilon:
                action = int(eligible[rng.integers(len(eligible))])
            else:
                action = int(eligible[np.argmax(values[eligible])])
            result = env.step(action)
            total += result.reward
            if env.done:
                target = result.reward
            else:
                next_mask = result.info["mask"]
                next_values = q_values(env.canonical_key())
                next_eligible = np.flatnonzero(next_mask)
                target = result.reward + hp.gamma * float(
                    np.max(next_values[next_eligible])
                )
            values[action] += hp.alpha * (target - values[action])
        curve.append((episode, total, env.kpis().makespan))
        epsilon = max(hp.epsilon_final, epsilon * hp.epsilon_decay)

    return QTrainingResult(
        policy=QTablePolicy(table, env.space.size, instance.name),
        curve=curve,
    )
