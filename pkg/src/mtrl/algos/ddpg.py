"""Multi-task DDPG: actor and critic both use the shared-trunk network."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..envs import EnvSpec, Episode
from ..evaluation import LearningCurve, evaluate_greedy
from ..mtnet import GradientBatch, MultiTaskNetwork, RegressionBatch, build_preset, sync_target
from ..nn import LossSpec
from ..replay import ReplayMemory, sample_multitask
from .common import OuNoise, continuous_targets, streams


@dataclass
class DDPGConfig:
    epochs: int = 20
    steps_per_epoch: int = 2000
    eval_steps: int = 1000
    batch_per_task: int = 64
    capacity: int = 50000
    warmup: int = 64
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    l2: float = 0.01
    tau: float = 1e-3
    ou_theta: float = 0.15
    ou_sigma: float = 0.2
    loss: str = "huber"
    huber_delta: float = 1.0
    actor_widths: dict | None = None
    critic_widths: dict | None = None
    evaluate_initial: bool = True

    def __post_init__(self):
        if self.batch_per_task > self.capacity or self.warmup > self.capacity:
            raise ValueError("batch and warmup must fit in the replay capacity")

    def to_dict(self) -> dict:
        return asdict(self)


def to_env_action(spec: EnvSpec, y) -> np.ndarray:
    """Map a tanh output in [-1, 1] onto the task's action box."""
    low, high = np.asarray(spec.action_low), np.asarray(spec.action_high)
    y = np.clip(np.asarray(y, dtype=np.float64), -1.0, 1.0)
    return low + (y + 1.0) * 0.5 * (high - low)


def actor_policy(actor: MultiTaskNetwork, task: int, spec: EnvSpec):
    def act(obs):
        return to_env_action(spec, actor.forward(task, obs))
    return act


def build_actor_critic(specs, rng, config: DDPGConfig):
    in_dims = [s.obs_dim for s in specs]
    a_dims = [s.action_dim for s in specs]
    actor = build_preset("mddpg_actor", in_dims, a_dims, rng, widths=config.actor_widths)
    critic = build_preset("mddpg_critic", in_dims, a_dims, rng, widths=config.critic_widths)
    return actor, critic


def policy_gradient_batches(actor, critic, states_by_task):
    """Upstream gradients of -mean_t,i Q(s, mu(s)) w.r.t. each actor output."""
    total = sum(len(s) for s in states_by_task)
    out = []
    for t, s in enumerate(states_by_task):
        mu = actor.forward(t, s)
        _, dq_da = critic.input_gradient(t, s, mu, np.ones((len(s), 1)))
        out.append(GradientBatch(s, -dq_da[:, :mu.shape[1]] / total))
    return out


def ddpg_update(actor, critic, target_actor, target_critic, batches, gammas, config: DDPGConfig,
                loss: LossSpec) -> float:
    targets = continuous_targets(target_actor, target_critic, batches, gammas)
    critic_loss = critic.update([RegressionBatch(b.s, y, extra=b.a) for b, y in zip(batches, targets)],
                                loss, config.critic_lr, l2=config.l2)
    actor.update(policy_gradient_batches(actor, critic, [b.s for b in batches]), None, config.actor_lr)
    sync_target(actor, target_actor, "soft", config.tau)
    sync_target(critic, target_critic, "soft", config.tau)
    return critic_loss


def mddpg_train(specs: list[EnvSpec], config: DDPGConfig, seed: int, actor=None, critic=None,
                freeze_schedule=None, algorithm: str | None = None, suite: str = "",
                config_hash: str = ""):
    """One step per task per algorithm step, then one actor-critic update on
    an equal-share batch. Returns ``(curve, actor, critic)``."""
    for s in specs:
        if s.discrete:
            raise ValueError(f"{s.label or s.name} has discrete actions; DDPG needs a box")
    T = len(specs)
    rng = streams(seed, "init", "env", "explore", "replay", "eval")
    if actor is None or critic is None:
        actor, critic = build_actor_critic(specs, rng["init"], config)
    target_actor, target_critic = actor.copy(), critic.copy()
    loss = LossSpec(config.loss, delta=config.huber_delta)
    mems = [ReplayMemory(config.capacity, config.warmup, task=t) for t in range(T)]
    env_rngs = [np.random.default_rng(c) for c in np.random.SeedSequence(
        int(rng["env"].integers(2 ** 63))).spawn(T)]
    episodes = [Episode(s, r, task=t) for t, (s, r) in enumerate(zip(specs, env_rngs))]
    noises = [OuNoise(s.action_dim, rng["explore"], config.ou_theta, config.ou_sigma) for s in specs]
    obs = [ep.reset() for ep in episodes]
    gammas = [s.gamma for s in specs]
    labels = [s.label or s.name for s in specs]
    curve = LearningCurve(algorithm or ("mddpg" if T > 1 else "ddpg"), suite, labels, seed, config_hash)

    def evaluate(epoch):
        for t, s in enumerate(specs):
            returns = evaluate_greedy(actor_policy(actor, t, s), s, config.eval_steps, rng["eval"])
            curve.add(labels[t], epoch, "return", float(np.mean(returns)))

    if config.evaluate_initial:
        evaluate(0)
    for epoch in range(1, config.epochs + 1):
        if freeze_schedule is not None:
            frozen = bool(freeze_schedule(epoch))
            actor.shared_frozen = critic.shared_frozen = frozen
        for _ in range(config.steps_per_epoch):
            for t, ep in enumerate(episodes):
                y = np.clip(actor.forward(t, obs[t]) + noises[t].sample(), -1.0, 1.0)
                tr = ep.step(to_env_action(specs[t], y))
                tr.a = y  # the critic sees normalized actions
                mems[t].push(tr)
                if ep.done:
                    obs[t] = ep.reset()
                    noises[t].reset()
                else:
                    obs[t] = tr.s_next
            if all(m.ready for m in mems):
                batches = sample_multitask(mems, config.batch_per_task, rng["replay"])
                ddpg_update(actor, critic, target_actor, target_critic, batches, gammas, config, loss)
        evaluate(epoch)
    return curve, actor, critic
