"""Clipped-surrogate policy-gradient training (actor-critic, GAE, masked actions).

The network and its gradients are written out in numpy rather than pulled
from an autodiff framework: runs are bit-reproducible per seed, and the
analytic gradient is checked against central finite differences in the test
suite, which would be meaningless against a framework's own autograd.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..env import Action, RewardConfig, ShopEnv
from ..model import DomainError, Instance

MASK_OFFSET = -1e9  # additive logit for ineligible actions; exp() underflows to exactly 0


@dataclass(frozen=True)
class PgHyperparams:
    clip_epsilon: float = 0.2
    gamma: float = 0.99
    gae_lambda: float = 0.95
    learning_rate: float = 3e-3
    epochs_per_batch: int = 4
    batch_episodes: int = 8
    hidden_layer_sizes: tuple[int, ...] = (64, 64)
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    max_updates: int = 150
    seed: int = 0

    def check(self) -> None:
        if not 0.0 < self.clip_epsilon < 1.0:
            raise DomainError(f"clip_epsilon must be in (0, 1), got {self.clip_epsilon}")
        if not 0.0 <= self.gamma <= 1.0 or not 0.0 <= self.gae_lambda <= 1.0:
            raise DomainError("gamma and gae_lambda must be in [0, 1]")
        if self.learning_rate <= 0:
            raise DomainError("learning_rate must be > 0")
        if min(self.epochs_per_batch, self.batch_episodes, self.max_updates) < 1:
            raise DomainError("epochs_per_batch, batch_episodes, max_updates must be >= 1")


# ---------------------------------------------------------------------------
# Observation encoding.


def encoding_dims(instance: Instance) -> tuple[int, int]:
    """(input dimension, action dimension) of the flattened observation."""
    m, n = instance.n_machines, instance.n_jobs
    s_max = max(machine.setup_count for machine in instance.machines)
    return m * (2 + s_max) + 2 * n + m, n + 1


def time_scale(instance: Instance) -> float:
    """Horizon estimate: sum of worst-case total times over all operations."""
    max_transport = max(max(row) for row in instance.transport)
    total = 0.0
    for job in instance.jobs:
        for op in job.ops:
            max_setup = max(max(row) for row in instance.machines[op.machine_id].setup_time)
            total += job.quantity * op.unit_time + max_transport + max_setup
    return max(total, 1.0)


def encode_observation(env: ShopEnv) -> np.ndarray:
    instance = env.instance
    m, n = instance.n_machines, instance.n_jobs
    s_max = max(machine.setup_count for machine in instance.machines)
    horizon = time_scale(instance)
    vol_scale = max(buf.capacity for buf in instance.buffers)
    obs = env.observe()
    parts = np.zeros(m * (2 + s_max) + 2 * n + m)
    at = 0
    for k in range(m):
        parts[at] = obs.machine_info[0, k] / max(n, 1)
        parts[at + 1] = obs.machine_info[1, k] / horizon
        parts[at + 2 + int(obs.machine_info[2, k])] = 1.0
        at += 2 + s_max
    for j in range(n):
        parts[at] = obs.job_info[0, j] / vol_scale
        parts[at + 1] = obs.job_info[1, j] / horizon
        at += 2
    for k in range(m):
        parts[at] = obs.buffer_info[k] / instance.buffers[k].capacity
        at += 1
    return parts


# ---------------------------------------------------------------------------
# The network: shared tanh trunk, policy head and value head.


class PgNetwork:
    def __init__(self, input_dim: int, action_dim: int,
                 hidden: tuple[int, ...], rng: np.random.Generator):
        self.input_dim = input_dim
        self.action_dim = action_dim
        self.hidden = tuple(hidden)
        self.params: list[np.ndarray] = []
        last = input_dim
        for width in hidden:
            self.params.append(rng.normal(0.0, 1.0 / math.sqrt(last), size=(last, width)))
            self.params.append(np.zeros(width))
            last = width
        self.params.append(rng.normal(0.0, 0.01, size=(last, action_dim)))  # policy head
        self.params.append(np.zeros(action_dim))
        self.params.append(rng.normal(0.0, 0.01, size=(last, 1)))  # value head
        self.params.append(np.zeros(1))

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, list[np.ndarray]]:
        """Returns (logits [B,A], values [B], activations per hidden layer)."""
        h = x
        acts = []
        for i in range(len(self.hidden)):
            w, b = self.params[2 * i], self.params[2 * i + 1]
            h = np.tanh(h @ w + b)
            acts.append(h)
        wp, bp = self.params[-4], self.params[-3]
        wv, bv = self.params[-2], self.params[-1]
        return h @ wp + bp, (h @ wv + bv)[:, 0], acts

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params])

    def set_flat(self, flat: np.ndarray) -> None:
        at = 0
        for p in self.params:
            p[...] = flat[at:at + p.size].reshape(p.shape)
            at += p.size


def masked_log_probs(logits: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """Row-wise log softmax with ineligible entries pushed to -inf territory."""
    z = logits + np.where(masks, 0.0, MASK_OFFSET)
    z_max = z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z - z_max).sum(axis=1, keepdims=True)) + z_max
    return z - lse


@dataclass
class Batch:
    obs: np.ndarray        # [B, D]
    actions: np.ndarray    # [B] int
    masks: np.ndarray      # [B, A] bool
    logp_old: np.ndarray   # [B]
    advantages: np.ndarray  # [B]
    returns: np.ndarray    # [B]


def surrogate_loss_and_grad(
    net: PgNetwork, batch: Batch, hp: PgHyperparams
) -> tuple[float, list[np.ndarray]]:
    """PPO loss L = -E[min(rho*A, clip(rho)*A)] + c_v*E[(V-R)^2] - c_e*E[H]."""
    B = batch.obs.shape[0]
    logits, values, acts = net.forward(batch.obs)
    logp = masked_log_probs(logits, batch.masks)
    probs = np.exp(logp)
    idx = np.arange(B)
    logp_a = logp[idx, batch.actions]
    rho = np.exp(logp_a - batch.logp_old)
    adv = batch.advantages
    unclipped = rho * adv
    clipped = np.clip(rho, 1.0 - hp.clip_epsilon, 1.0 + hp.clip_epsilon) * adv
    surr = np.minimum(unclipped, clipped)
    entropy = -(probs * logp).sum(axis=1)
    value_err = values - batch.returns
    loss = float(
        -surr.mean()
        + hp.value_coef * (value_err**2).mean()
        - hp.entropy_coef * entropy.mean()
    )

    # d(-surr)/d(logp_a): gradient flows only where the unclipped branch is
    # the active minimum; elsewhere the clip makes the term constant in theta.
    active = (unclipped <= clipped).astype(float)
    dlogp_a = -(active * rho * adv) / B
    dlogits = probs * (-dlogp_a)[:, None]  # from -logsumexp part
    dlogits[idx, batch.actions] += dlogp_a
    # entropy: dH/dz_k = -p_k (logp_k + H); loss has -c_e * mean(H)
    dlogits += (hp.entropy_coef / B) * probs * (logp + entropy[:, None])
    dvalues = (2.0 * hp.value_coef / B) * value_err

    grads = [np.zeros_like(p) for p in net.params]
    h_last = acts[-1] if acts else batch.obs
    wp, wv = net.params[-4], net.params[-2]
    grads[-4] = h_last.T @ dlogits
    grads[-3] = dlogits.sum(axis=0)
    grads[-2] = h_last.T @ dvalues[:, None]
    grads[-1] = dvalues.sum(axis=0, keepdims=True).reshape(1)
    dh = dlogits @ wp.T + dvalues[:, None] @ wv.T
    for i in reversed(range(len(net.hidden))):
        pre = dh * (1.0 - acts[i] ** 2)
        below = acts[i - 1] if i > 0 else batch.obs
        grads[2 * i] = below.T @ pre
        grads[2 * i + 1] = pre.sum(axis=0)
        dh = pre @ net.params[2 * i].T
    return loss, grads


class Adam:
    def __init__(self, params: list[np.ndarray], lr: float,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr = lr
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        self.t += 1
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1 - self.beta1) * g
            v *= self.beta2
            v += (1 - self.beta2) * g * g
            m_hat = m / (1 - self.beta1**self.t)
            v_hat = v / (1 - self.beta2**self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


# ---------------------------------------------------------------------------
# Policy object and trainer.


class NeuralPolicy:
    def __init__(self, net: PgNetwork, instance_dims: tuple[int, int],
                 instance_name: str = "", mode: str = "greedy", seed: int = 0):
        self.net = net
        self.instance_dims = instance_dims
        self.instance_name = instance_name
        self.mode = mode
        self._rng = np.random.default_rng(seed)

    def reseed(self, seed: int) -> None:
        self._rng = np.random.default_rng(seed)

    def compatible_with(self, instance: Instance) -> bool:
        return encoding_dims(instance) == self.instance_dims

    def distribution(self, env: ShopEnv) -> np.ndarray:
        """Eligible-action probabilities; masked actions have exactly zero mass."""
        mask = env.eligible_mask()
        x = encode_observation(env)[None, :]
        logits, _, _ = self.net.forward(x)
        probs = np.exp(masked_log_probs(logits, mask[None, :]))[0]
        probs[~mask] = 0.0
        total = probs.sum()
        if total <= 0:
            raise DomainError("policy produced an empty distribution")
        return probs / total

    def act(self, env: ShopEnv) -> Action:
        mask = env.eligible_mask()
        if not mask.any():
            raise DomainError("no eligible action")
        if self.mode == "greedy":
            x = encode_observation(env)[None, :]
            logits, _, _ = self.net.forward(x)
            z = logits[0] + np.where(mask, 0.0, MASK_OFFSET)
            return env.space.action(int(np.argmax(z)))
        probs = self.distribution(env)
        return env.space.action(int(self._rng.choice(len(probs), p=probs)))

    def __repr__(self) -> str:
        return f"NeuralPolicy(dims={self.instance_dims}, mode={self.mode!r})"


@dataclass
class PgTrainingResult:
    policy: NeuralPolicy
    curve: list[tuple[int, float, float]]  # (update, mean return, mean makespan)


def _collect_episode(env: ShopEnv, net: PgNetwork, rng: np.random.Generator):
    env.reset()
    obs_l, act_l, mask_l, logp_l, val_l, rew_l = [], [], [], [], [], []
    while not env.done:
        mask = env.eligible_mask()
        x = encode_observation(env)
        logits, value, _ = net.forward(x[None, :])
        logp = masked_log_probs(logits, mask[None, :])[0]
        probs = np.exp(logp)
        probs[~mask] = 0.0
        probs = probs / probs.sum()
        action = int(rng.choice(len(probs), p=probs))
        result = env.step(action)
        obs_l.append(x)
        act_l.append(action)
        mask_l.append(mask)
        logp_l.append(logp[action])
        val_l.append(float(value[0]))
        rew_l.append(result.reward)
    return obs_l, act_l, mask_l, logp_l, val_l, rew_l, env.kpis().makespan


def _gae(rewards, values, gamma: float, lam: float):
    n = len(rewards)
    adv = np.zeros(n)
    last = 0.0
    for t in reversed(range(n)):
        next_value = values[t + 1] if t + 1 < n else 0.0
        delta = rewards[t] + gamma * next_value - values[t]
        last = delta + gamma * lam * last
        adv[t] = last
    returns = adv + np.array(values)
    return adv, returns


def train_pg(
    instances: Instance | list[Instance],
    hp: PgHyperparams | None = None,
    config: RewardConfig | None = None,
) -> PgTrainingResult:
    """Actor-critic training with the clipped surrogate objective.

    Fully deterministic per seed.  Raises on non-finite losses instead of
    continuing with a diverged network.
    """
    hp = hp or PgHyperparams()
    hp.check()
    if isinstance(instances, Instance):
        instances = [instances]
    dims = encoding_dims(instances[0])
    for inst in instances[1:]:
        if encoding_dims(inst) != dims:
            raise DomainError("all training instances must share observation/action shapes")
    config = config or RewardConfig.makespan_only()
    rng = np.random.default_rng(hp.seed)
    net = PgNetwork(dims[0], dims[1], hp.hidden_layer_sizes, rng)
    envs = [ShopEnv(inst, config=config) for inst in instances]
    adam = Adam(net.params, hp.learning_rate)
    curve: list[tuple[int, float, float]] = []

    for update in range(hp.max_updates):
        obs_l, act_l, mask_l, logp_l, adv_l, ret_l = [], [], [], [], [], []
        ep_returns, ep_makespans = [], []
        for episode in range(hp.batch_episodes):
            env = envs[(update * hp.batch_episodes + episode) % len(envs)]
            obs, acts, masks, logps, vals, rews, makespan = _collect_episode(env, net, rng)
            adv, rets = _gae(rews, vals, hp.gamma, hp.gae_lambda)
            obs_l += obs
            act_l += acts
            mask_l += masks
            logp_l += logps
            adv_l.append(adv)
            ret_l.append(rets)
            ep_returns.append(float(sum(rews)))
            ep_makespans.append(makespan)
        advantages = np.concatenate(adv_l)
        std = advantages.std()
        if std > 1e-8:
            advantages = (advantages - advantages.mean()) / std
        batch = Batch(
            obs=np.array(obs_l),
            actions=np.array(act_l, dtype=int),
            masks=np.array(mask_l, dtype=bool),
            logp_old=np.array(logp_l),
            advantages=advantages,
            returns=np.concatenate(ret_l),
        )
        for _ in range(hp.epochs_per_batch):
            loss, grads = surrogate_loss_and_grad(net, batch, hp)
            if not math.isfinite(loss):
                raise DomainError(f"training diverged: non-finite loss at update {update}")
            adam.step(net.params, grads)
        curve.append((update, float(np.mean(ep_returns)), float(np.mean(ep_makespans))))

    policy = NeuralPolicy(net, dims, instances[0].name, mode="greedy", seed=hp.seed)
    return PgTrainingResult(policy=policy, curve=curve)
