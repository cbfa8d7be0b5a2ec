"""Per-task replay memories and the equal-share multi-task sampler."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .envs import Transition


class NotReadyError(RuntimeError):
    """A memory is still below its warm-up size."""


@dataclass
class SampleBatch:
    s: np.ndarray
    a: np.ndarray
    r: np.ndarray
    s_next: np.ndarray
    absorbing: np.ndarray
    task: int | None = None

    def __len__(self):
        return len(self.r)


class ReplayMemory:
    """Fixed-capacity FIFO of transitions for one task.

    Stored in preallocated ring arrays; the oldest entry is overwritten once
    the memory is full.
    """

    def __init__(self, capacity: int, warmup: int = 0, task: int | None = None):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        if not 0 <= warmup <= capacity:
            raise ValueError("warmup must lie in [0, capacity]")
        self.capacity = capacity
        self.warmup = warmup
        self.task = task
        self._size = 0
        self._next = 0
        self._s = self._a = self._r = self._s2 = self._absorbing = None

    def __len__(self):
        return self._size

    @property
    def ready(self) -> bool:
        return self._size >= max(self.warmup, 1)

    def _allocate(self, t: Transition):
        s = np.asarray(t.s, dtype=np.float64)
        a = np.asarray(t.a)
        self._s = np.zeros((self.capacity,) + s.shape)
        self._s2 = np.zeros_like(self._s)
        a_dtype = np.int64 if a.dtype.kind in "iu" else np.float64
        self._a = np.zeros((self.capacity,) + a.shape, dtype=a_dtype)
        self._r = np.zeros(self.capacity)
        self._absorbing = np.zeros(self.capacity, dtype=bool)

    def push(self, t: Transition) -> None:
        if t.task is not None and self.task is not None and t.task != self.task:
            raise ValueError(f"transition of task {t.task} pushed to memory of task {self.task}")
        if self._s is None:
            self._allocate(t)
        i = self._next
        self._s[i] = t.s
        self._a[i] = t.a
        self._r[i] = t.r
        self._s2[i] = t.s_next
        self._absorbing[i] = t.absorbing
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def _ordered_index(self):
        start = self._next if self._size == self.capacity else 0
        return (start + np.arange(self._size)) % self.capacity

    def transitions(self) -> list[Transition]:
        """Contents oldest first."""
        return [Transition(self._s[i].copy(), self._a[i].item() if self._a.ndim == 1 else self._a[i].copy(),
                           float(self._r[i]), self._s2[i].copy(), bool(self._absorbing[i]), task=self.task)
                for i in self._ordered_index()]

    def sample(self, n: int, rng: np.random.Generator) -> SampleBatch:
        """Uniform sample with replacement."""
        if not self.ready:
            raise NotReadyError(f"memory holds {self._size} < warmup {self.warmup}")
        idx = rng.integers(0, self._size, size=n)
        return SampleBatch(self._s[idx], self._a[idx], self._r[idx], self._s2[idx],
                           self._absorbing[idx], self.task)


def push(mem: ReplayMemory, t: Transition) -> None:
    mem.push(t)


def sample_multitask(mems, per_task: int, rng: np.random.Generator) -> list[SampleBatch]:
    """Exactly ``per_task`` samples from every memory, in task order."""
    for t, mem in enumerate(mems):
        if not mem.ready:
            raise NotReadyError(f"memory {t} holds {len(mem)} < warmup {mem.warmup}")
    return [mem.sample(per_task, rng) for mem in mems]


def dump_transitions(transitions, path) -> None:
    """One JSON record per line."""
    with open(path, "w") as fh:
        for t in transitions:
            fh.write(json.dumps({
                "task": t.task, "s": np.asarray(t.s).tolist(), "a": np.asarray(t.a).tolist(),
                "r": t.r, "s_next": np.asarray(t.s_next).tolist(),
                "absorbing": bool(t.absorbing), "truncated": bool(t.truncated)}) + "\n")


def load_transitions(path) -> list[Transition]:
    out = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            a = d["a"] if isinstance(d["a"], int) else np.asarray(d["a"], dtype=np.float64)
            out.append(Transition(np.asarray(d["s"], dtype=np.float64), a, float(d["r"]),
                                  np.asarray(d["s_next"], dtype=np.float64), d["absorbing"],
                                  d.get("truncated", False), d.get("task")))
    return out
