"""Multi-task DQN. With a single task it is plain DQN on the same network shape."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..envs import EnvSpec, Episode
from ..evaluation import LearningCurve, evaluate_greedy, greedy_policy
from ..mtnet import MultiTaskNetwork, RegressionBatch, build_preset, sync_target
from ..nn import LossSpec
from ..replay import ReplayMemory, sample_multitask
from .common import EpsilonSchedule, bellman_targets, streams


@dataclass
class DQNConfig:
    epochs: int = 30
    steps_per_epoch: int = 1000
    eval_steps: int = 2000
    batch_per_task: int = 100
    capacity: int = 5000
    warmup: int = 100
    lr: float = 1e-3
    target_update: int = 100
    eps_start: float = 1.0
    eps_end: float = 0.01
    eps_decay_steps: int = 5000
    loss: str = "huber"
    huber_delta: float = 1.0
    widths: dict | None = None
    evaluate_initial: bool = True

    def __post_init__(self):
        if self.batch_per_task > self.capacity:
            raise ValueError("batch_per_task cannot exceed the replay capacity")
        if self.warmup > self.capacity:
            raise ValueError("warmup cannot exceed the replay capacity")
        if self.target_update < 1 or self.steps_per_epoch < 1:
            raise ValueError("target_update and steps_per_epoch must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class DQNResult:
    curve: LearningCurve
    net: MultiTaskNetwork
    env_steps: list


def mdqn_train(specs: list[EnvSpec], config: DQNConfig, seed: int, net: MultiTaskNetwork | None = None,
               freeze_schedule=None, algorithm: str | None = None, suite: str = "",
               config_hash: str = "") -> DQNResult:
    """Train one Q-network on all tasks at once.

    Every algorithm step takes exactly one epsilon-greedy step in each task,
    then one gradient step on an equal-share batch from the per-task
    memories. ``freeze_schedule(epoch) -> bool`` is consulted before each
    epoch's first step to freeze or release the shared trunk.
    """
    for s in specs:
        if not s.discrete:
            raise ValueError(f"{s.label or s.name} has continuous actions")
    T = len(specs)
    rng = streams(seed, "init", "env", "explore", "replay", "eval")
    if net is None:
        net = build_preset("mdqn_q", [s.obs_dim for s in specs], [s.n_actions for s in specs],
                           rng["init"], widths=config.widths)
    target = net.copy()
    sync_target(net, target, "hard")
    loss = LossSpec(config.loss, delta=config.huber_delta)
    schedule = EpsilonSchedule(config.eps_start, config.eps_end, config.eps_decay_steps)
    mems = [ReplayMemory(config.capacity, config.warmup, task=t) for t in range(T)]
    env_rngs = [np.random.default_rng(c) for c in np.random.SeedSequence(
        int(rng["env"].integers(2 ** 63))).spawn(T)]
    episodes = [Episode(s, r, task=t) for t, (s, r) in enumerate(zip(specs, env_rngs))]
    obs = [ep.reset() for ep in episodes]
    gammas = [s.gamma for s in specs]
    labels = [s.label or s.name for s in specs]
    name = algorithm or ("mdqn" if T > 1 else "dqn")
    curve = LearningCurve(name, suite, labels, seed, config_hash)
    env_steps = [0] * T
    explore = rng["explore"]

    def evaluate(epoch):
        for t, s in enumerate(specs):
            returns = evaluate_greedy(greedy_policy(net, t), s, config.eval_steps, rng["eval"])
            curve.add(labels[t], epoch, "return", float(np.mean(returns)))

    if config.evaluate_initial:
        evaluate(0)
    step = 0
    for epoch in range(1, config.epochs + 1):
        if freeze_schedule is not None:
            net.shared_frozen = bool(freeze_schedule(epoch))
        for _ in range(config.steps_per_epoch):
            eps = schedule(step)
            for t, ep in enumerate(episodes):
                if explore.random() < eps:
                    a = int(explore.integers(specs[t].n_actions))
                else:
                    a = int(np.argmax(net.forward(t, obs[t])))
                tr = ep.step(a)
                env_steps[t] += 1
                mems[t].push(tr)
                obs[t] = ep.reset() if ep.done else tr.s_next
            if all(m.ready for m in mems):
                batches = sample_multitask(mems, config.batch_per_task, rng["replay"])
                targets = bellman_targets(target, batches, gammas)
                net.update([RegressionBatch(b.s, y, b.a) for b, y in zip(batches, targets)],
                           loss, config.lr)
            step += 1
            if step % config.target_update == 0:
                sync_target(net, target, "hard")
        evaluate(epoch)
    return DQNResult(curve, net, env_steps)
