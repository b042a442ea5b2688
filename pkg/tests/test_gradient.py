import numpy as np
import pytest

from shopfloor.env import RewardConfig, ShopEnv, rollout
from shopfloor.instances import GenSpec, generate_instance
from shopfloor.policies import (
    PgHyperparams,
    policy_act,
    train_pg,
)
from shopfloor.policies.gradient import (
    Batch,
    PgNetwork,
    encode_observation,
    encoding_dims,
    masked_log_probs,
    surrogate_loss_and_grad,
)


def toy_batch(rng, net, batch_size=6):
    obs = rng.normal(size=(batch_size, net.input_dim))
    masks = np.ones((batch_size, net.action_dim), dtype=bool)
    masks[0, -1] = False
    actions = rng.integers(0, net.action_dim - 1, size=batch_size)
    logits, _, _ = net.forward(obs)
    logp_old = masked_log_probs(logits, masks)[np.arange(batch_size), actions]
    logp_old = logp_old + rng.normal(0, 0.05, batch_size)  # off-policy ratios
    return Batch(
        obs=obs,
        actions=actions,
        masks=masks,
        logp_old=logp_old,
        advantages=rng.normal(size=batch_size),
        returns=rng.normal(size=batch_size),
    )


class TestGradient:
    def test_matches_central_finite_differences_on_toy_network(self):
        rng = np.random.default_rng(42)
        net = PgNetwork(3, 2, (1,), rng)
        assert sum(p.size for p in net.params) == 10
        hp = PgHyperparams()
        batch = toy_batch(rng, net)
        _, grads = surrogate_loss_and_grad(net, batch, hp)
        analytic = np.concatenate([g.ravel() for g in grads])
        theta = net.get_flat()
        h = 1e-6
        fd = np.zeros_like(theta)
        for i in range(len(theta)):
            up, down = theta.copy(), theta.copy()
            up[i] += h
            down[i] -= h
            net.set_flat(up)
            loss_up, _ = surrogate_loss_and_grad(net, batch, hp)
            net.set_flat(down)
            loss_down, _ = surrogate_loss_and_grad(net, batch, hp)
            fd[i] = (loss_up - loss_down) / (2 * h)
        net.set_flat(theta)
        rel = np.abs(analytic - fd) / np.maximum(1e-8, np.abs(fd))
        assert rel.max() < 1e-4

    def test_gradient_on_deeper_network(self):
        rng = np.random.default_rng(7)
        net = PgNetwork(5, 4, (8, 6), rng)
        hp = PgHyperparams(clip_epsilon=0.1, entropy_coef=0.02, value_coef=0.7)
        batch = toy_batch(rng, net, batch_size=12)
        _, grads = surrogate_loss_and_grad(net, batch, hp)
        analytic = np.concatenate([g.ravel() for g in grads])
        theta = net.get_flat()
        h = 1e-6
        idx = rng.choice(len(theta), size=40, replace=False)
        for i in idx:
            up, down = theta.copy(), theta.copy()
            up[i] += h
            down[i] -= h
            net.set_flat(up)
            loss_up, _ = surrogate_loss_and_grad(net, batch, hp)
            net.set_flat(down)
            loss_down, _ = surrogate_loss_and_grad(net, batch, hp)
            fd = (loss_up - loss_down) / (2 * h)
            assert abs(analytic[i] - fd) / max(1e-8, abs(fd)) < 1e-4
        net.set_flat(theta)

    def test_masked_entries_get_zero_probability_and_gradient(self):
        rng = np.random.default_rng(3)
        net = PgNetwork(4, 3, (4,), rng)
        logits, _, _ = net.forward(rng.normal(size=(5, 4)))
        masks = np.ones((5, 3), dtype=bool)
        masks[:, 2] = False
        probs = np.exp(masked_log_probs(logits, masks))
        assert np.all(probs[:, 2] == 0.0)


class TestTraining:
    def test_identical_seeds_identical_parameters(self, paper):
        hp = PgHyperparams(max_updates=5, batch_episodes=3, seed=9)
        a = train_pg(paper, hp)
        b = train_pg(paper, hp)
        for pa, pb in zip(a.policy.net.params, b.policy.net.params):
            assert np.array_equal(pa, pb)
        assert a.curve == b.curve

    def test_trained_beats_random_on_paper_instance(self, paper):
        hp = PgHyperparams(max_updates=40, batch_episodes=8, seed=0)
        result = train_pg(paper, hp)
        trained = rollout(paper, result.policy,
                          config=RewardConfig.makespan_only()).kpis.makespan
        from shopfloor.policies import HeuristicPolicy

        random_mean = np.mean([
            rollout(paper, HeuristicPolicy("random", seed=s),
                    config=RewardConfig.makespan_only()).kpis.makespan
            for s in range(20)
        ])
        assert trained < random_mean

    def test_incompatible_instances_rejected(self, paper):
        other = generate_instance(GenSpec(seed=0, n_jobs=2, n_machines=2))
        from shopfloor.model import DomainError

        with pytest.raises(DomainError, match="share observation"):
            train_pg([paper, other], PgHyperparams(max_updates=1))


@pytest.fixture(scope="module")
def trained(paper):
    return train_pg(paper, PgHyperparams(max_updates=8, batch_episodes=4, seed=1)).policy


class TestNeuralPolicyActing:
    def test_masked_action_never_sampled(self, paper, trained):
        env = ShopEnv(paper)
        env.step(env.space.action(2))  # only NOOP eligible now
        probs = trained.distribution(env)
        mask = env.eligible_mask()
        assert np.all(probs[~mask] == 0.0)
        rng = np.random.default_rng(0)
        draws = rng.choice(len(probs), size=100_000, p=probs)
        assert set(np.unique(draws)) <= set(np.flatnonzero(mask).tolist())

    def test_greedy_is_deterministic(self, paper, trained):
        env1, env2 = ShopEnv(paper), ShopEnv(paper)
        a = policy_act(trained, env1, mode="greedy")
        b = policy_act(trained, env2, mode="greedy")
        assert a == b

    def test_sampling_reproducible_per_seed(self, paper, trained):
        env = ShopEnv(paper)
        a = policy_act(trained, env, mode="sample", seed=11)
        b = policy_act(trained, env, mode="sample", seed=11)
        assert a == b

    def test_compatibility_check(self, paper, trained):
        other = generate_instance(GenSpec(seed=0, n_jobs=2, n_machines=2))
        assert trained.compatible_with(paper)
        assert not trained.compatible_with(other)

    def test_encoding_dims_match(self, paper):
        dim, actions = encoding_dims(paper)
        env = ShopEnv(paper)
        assert encode_observation(env).shape == (dim,)
        assert env.space.size == actions
