"""Start a single-task learner from a pretrained shared trunk."""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from ..envs import EnvSpec
from ..mtnet import build_preset, load_shared, transplant_shared
from .common import streams
from .ddpg import DDPGConfig, build_actor_critic, mddpg_train
from .dqn import DQNConfig, mdqn_train

_KINDS = ("scratch", "unfreeze_0", "no_unfreeze", "unfreeze_at")


@dataclass(frozen=True)
class TransferMode:
    """How the transplanted trunk is treated.

    ``unfreeze_at`` with epoch N keeps the trunk fixed for epochs 1..N and
    trains it from epoch N+1 on.
    """
    kind: str
    epoch: int = 0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown transfer mode {self.kind!r}")
        if self.kind == "unfreeze_at" and self.epoch < 0:
            raise ValueError("unfreeze epoch must be non-negative")

    @classmethod
    def parse(cls, text: str) -> "TransferMode":
        """Accepts ``scratch``, ``unfreeze_0``, ``no_unfreeze`` or ``unfreeze_at(N)``."""
        m = re.fullmatch(r"\s*unfreeze_at\(\s*(\d+)\s*\)\s*", text)
        if m:
            return cls("unfreeze_at", int(m.group(1)))
        return cls(text.strip())

    def __str__(self):
        return f"unfreeze_at({self.epoch})" if self.kind == "unfreeze_at" else self.kind

    @property
    def uses_snapshot(self) -> bool:
        return self.kind != "scratch"

    def frozen(self, epoch: int) -> bool:
        if self.kind == "no_unfreeze":
            return True
        if self.kind == "unfreeze_at":
            return epoch <= self.epoch
        return False


def _trunk(pretrained):
    return load_shared(pretrained) if isinstance(pretrained, (str, bytes)) or hasattr(pretrained, "__fspath__") \
        else pretrained


def run_transfer(pretrained, target: EnvSpec, mode: TransferMode, config, seed: int,
                 suite: str = "", config_hash: str = ""):
    """Train on ``target`` alone, starting from a pretrained trunk.

    For a DQN config ``pretrained`` is a snapshot path (or a trunk); for a
    DDPG config it is a dict with ``actor`` and ``critic`` entries.
    Returns the learning curve.
    """
    name = f"transfer:{mode}"
    schedule = mode.frozen if mode.uses_snapshot else None
    init = streams(seed, "init")["init"]
    if isinstance(config, DQNConfig):
        net = build_preset("mdqn_q", [target.obs_dim], [target.n_actions], init, widths=config.widths)
        if mode.uses_snapshot:
            transplant_shared(_trunk(pretrained), net)
        return mdqn_train([target], config, seed, net=net, freeze_schedule=schedule,
                          algorithm=name, suite=suite, config_hash=config_hash).curve
    if isinstance(config, DDPGConfig):
        actor, critic = build_actor_critic([target], init, config)
        if mode.uses_snapshot:
            transplant_shared(_trunk(pretrained["actor"]), actor)
            transplant_shared(_trunk(pretrained["critic"]), critic)
        curve, _, _ = mddpg_train([target], config, seed, actor=actor, critic=critic,
                                  freeze_schedule=schedule, algorithm=name, suite=suite,
                                  config_hash=config_hash)
        return curve
    raise TypeError(f"no single-task trainer for {type(config).__name__}")


def trunk_equal(a, b) -> bool:
    return all(np.array_equal(x, y) for x, y in zip(a.params(), b.params()))
