"""Exploration schedules, Bellman targets and seeding helpers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..replay import SampleBatch


@dataclass(frozen=True)
class EpsilonSchedule:
    start: float = 1.0
    end: float = 0.01
    decay_steps: int = 5000

    def __call__(self, step: int) -> float:
        if step >= self.decay_steps:
            return self.end
        frac = step / self.decay_steps
        return self.start + frac * (self.end - self.start)


class OuNoise:
    """Ornstein-Uhlenbeck process, one unit time step per sample:
    x <- x + theta * (mu - x) + sigma * N(0, 1)."""

    def __init__(self, dim: int, rng: np.random.Generator, theta=0.15, sigma=0.2, mu=0.0):
        self.dim, self.rng = dim, rng
        self.theta, self.sigma, self.mu = theta, sigma, mu
        self.x = np.full(dim, mu, dtype=np.float64)

    def reset(self) -> None:
        self.x = np.full(self.dim, self.mu, dtype=np.float64)

    def sample(self) -> np.ndarray:
        self.x = self.x + self.theta * (self.mu - self.x) + self.sigma * self.rng.standard_normal(self.dim)
        return self.x.copy()


def bellman_targets(net_k, batches, gammas) -> list[np.ndarray]:
    """r + gamma_t * max_a' Q_k(s', a'), or just r on absorbing transitions.

    ``batches`` holds one SampleBatch per task, in task order.
    """
    out = []
    for t, (b, g) in enumerate(zip(batches, gammas)):
        q_next = np.asarray(net_k.forward(t, b.s_next)).max(axis=1)
        out.append(b.r + g * np.where(b.absorbing, 0.0, q_next))
    return out


def continuous_targets(target_actor, target_critic, batches, gammas) -> list[np.ndarray]:
    """DDPG critic targets through the target actor and target critic."""
    out = []
    for t, (b, g) in enumerate(zip(batches, gammas)):
        a_next = target_actor.forward(t, b.s_next)
        q_next = target_critic.forward(t, b.s_next, a_next)[:, 0]
        out.append(b.r + g * np.where(b.absorbing, 0.0, q_next))
    return out


def stack_transitions(transitions, task=None) -> SampleBatch:
    return SampleBatch(np.array([t.s for t in transitions], dtype=np.float64),
                       np.array([t.a for t in transitions]),
                       np.array([t.r for t in transitions], dtype=np.float64),
                       np.array([t.s_next for t in transitions], dtype=np.float64),
                       np.array([t.absorbing for t in transitions], dtype=bool), task)


def streams(seed: int, *names):
    """Independent named generators derived from one run seed."""
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {n: np.random.default_rng(c) for n, c in zip(names, children)}
