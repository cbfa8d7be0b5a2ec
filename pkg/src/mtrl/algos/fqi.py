"""Fitted Q-Iteration on fixed datasets, single- or multi-task."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..envs import EnvSpec, Episode, dynamics
from ..mtnet import MultiTaskNetwork, RegressionBatch, build_preset
from ..nn import LossSpec
from ..oracle import build_q_oracle
from .common import bellman_targets, stack_transitions


@dataclass
class FQIConfig:
    iterations: int = 50
    fit_epochs: int = 20
    minibatch: int | None = None   # per task; None = full dataset
    lr: float = 1e-3
    loss: str = "mse"
    widths: dict | None = None
    snapshot_every: int = 1


@dataclass
class FQIResult:
    net: MultiTaskNetwork
    snapshots: list = field(default_factory=list)   # (iteration, network copy)
    fit_losses: list = field(default_factory=list)


def equalize(datasets, rng: np.random.Generator):
    """Subsample every task's dataset to the smallest size."""
    if any(len(d) == 0 for d in datasets):
        raise ValueError("empty dataset")
    n = min(len(d) for d in datasets)
    out = []
    for d in datasets:
        if len(d) == n:
            out.append(list(d))
        else:
            keep = np.sort(rng.choice(len(d), size=n, replace=False))
            out.append([d[i] for i in keep])
    return out


def fqi_run(datasets, specs: list[EnvSpec], config: FQIConfig, rng: np.random.Generator,
            net: MultiTaskNetwork | None = None) -> FQIResult:
    """Run ``config.iterations`` Bellman iterations.

    Iteration k freezes targets computed with Q_k and fits Q_{k+1} to them,
    continuing from Q_k's weights. The datasets are never modified.
    """
    if len(datasets) != len(specs):
        raise ValueError("need one dataset per task")
    data = [stack_transitions(d, t) for t, d in enumerate(equalize(datasets, rng))]
    n = len(data[0])
    if net is None:
        net = build_preset("mfqi", [s.obs_dim for s in specs], [s.n_actions for s in specs],
                           rng, widths=config.widths)
    loss = LossSpec(config.loss)
    gammas = [s.gamma for s in specs]
    result = FQIResult(net, [(0, net.copy())])
    for k in range(config.iterations):
        targets = bellman_targets(net, data, gammas)
        for _ in range(config.fit_epochs):
            if config.minibatch is None or config.minibatch >= n:
                batch = [RegressionBatch(b.s, y, b.a) for b, y in zip(data, targets)]
                last = net.update(batch, loss, config.lr)
            else:
                orders = [rng.permutation(n) for _ in data]
                for start in range(0, n - config.minibatch + 1, config.minibatch):
                    batch = []
                    for b, y, order in zip(data, targets, orders):
                        idx = order[start:start + config.minibatch]
                        batch.append(RegressionBatch(b.s[idx], y[idx], b.a[idx]))
                    last = net.update(batch, loss, config.lr)
        result.fit_losses.append(last)
        if (k + 1) % config.snapshot_every == 0 or k + 1 == config.iterations:
            result.snapshots.append((k + 1, net.copy()))
    return result


def collect_dataset(spec: EnvSpec, n: int, rng: np.random.Generator, random_fraction: float = 0.5,
                    epsilon: float = 0.1, coarse_resolution: int = 41) -> list:
    """Transitions for batch learning.

    A ``random_fraction`` of the samples comes from uniform-random actions
    started at uniformly drawn states of the box; the rest from an
    epsilon-greedy run of a coarse grid value-iteration policy started at
    the task's usual initial state.
    """
    dyn = dynamics(spec)
    box = np.array(dyn.box)
    coarse = build_q_oracle(spec, coarse_resolution, mode="multilinear")
    out = []
    n_random = int(round(random_fraction * n))
    ep = Episode(spec, rng)
    while len(out) < n_random:
        ep.reset()
        ep.state = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random(len(box))
        while not ep.done and len(out) < n_random:
            out.append(ep.step(int(rng.integers(spec.n_actions))))
    while len(out) < n:
        obs = ep.reset()
        while not ep.done and len(out) < n:
            if rng.random() < epsilon:
                a = int(rng.integers(spec.n_actions))
            else:
                a = int(coarse.greedy(obs[None, :])[0])
            tr = ep.step(a)
            out.append(tr)
            obs = tr.s_next
    return out
