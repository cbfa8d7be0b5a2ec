"""Task description, transitions and the episode runner shared by all tasks."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class EnvSpec:
    """Immutable, fully parameterized task.

    Discrete tasks list their action values in ``actions``; continuous ones
    give ``action_low``/``action_high`` instead.
    """
    name: str
    params: dict = field(default_factory=dict)
    obs_dim: int = 1
    gamma: float = 0.99
    horizon: int = 100
    dt: float = 0.1
    actions: tuple | None = None
    action_low: tuple | None = None
    action_high: tuple | None = None
    label: str = ""

    def __post_init__(self):
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.actions is None and self.action_low is None:
            raise ValueError("need a discrete action list or a continuous box")
        if self.actions is not None and len(self.actions) == 0:
            raise ValueError("discrete action list is empty")

    @property
    def discrete(self) -> bool:
        return self.actions is not None

    @property
    def n_actions(self) -> int:
        if not self.discrete:
            raise TypeError(f"{self.name} has a continuous action space")
        return len(self.actions)

    @property
    def action_dim(self) -> int:
        return 1 if self.discrete else len(self.action_low)

    def to_dict(self) -> dict:
        return {"name": self.name, "label": self.label, "params": dict(self.params),
                "obs_dim": self.obs_dim, "gamma": self.gamma, "horizon": self.horizon,
                "dt": self.dt,
                "actions": None if self.actions is None else list(self.actions),
                "action_low": None if self.action_low is None else list(self.action_low),
                "action_high": None if self.action_high is None else list(self.action_high)}

    @classmethod
    def from_dict(cls, d: dict) -> "EnvSpec":
        d = dict(d)
        for key in ("actions", "action_low", "action_high"):
            if d.get(key) is not None:
                d[key] = tuple(float(v) for v in d[key])
        return cls(**d)


@dataclass
class Transition:
    """One sample (s, a, r, s', absorbing).

    ``s``/``s_next`` are observations; they equal the state for every task
    except Acrobot, which observes cos/sin of its angles. Truncation by the
    horizon is not absorbing.
    """
    s: np.ndarray
    a: int | np.ndarray
    r: float
    s_next: np.ndarray
    absorbing: bool
    truncated: bool = False
    task: int | None = None


class Dynamics:
    """Per-task physics. Subclasses implement reset/advance and may provide
    a vectorized ``advance_batch`` plus ``box`` for the grid Q-oracle."""

    box: tuple | None = None
    deterministic: bool = True

    def reset(self, spec: EnvSpec, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def advance(self, spec, state, action_value, rng):
        """Return ``(next_state, reward, absorbing)``."""
        raise NotImplementedError

    def observe(self, spec, state) -> np.ndarray:
        return np.asarray(state, dtype=np.float64)

    def advance_batch(self, spec, states, action_value):
        raise NotImplementedError(f"{type(self).__name__} has no batch dynamics")


REGISTRY: dict[str, Dynamics] = {}


def register(name):
    def deco(cls):
        REGISTRY[name] = cls()
        return cls
    return deco


def dynamics(spec: EnvSpec) -> Dynamics:
    try:
        return REGISTRY[spec.name]
    except KeyError:
        raise KeyError(f"no dynamics registered for {spec.name!r}") from None


def action_value(spec: EnvSpec, a):
    """Map an action index (discrete) or vector (continuous) to its value,
    rejecting anything outside the action space."""
    if spec.discrete:
        if not isinstance(a, (int, np.integer)) or not 0 <= a < len(spec.actions):
            raise ValueError(f"action {a!r} not in {spec.name}'s {len(spec.actions)} actions")
        return spec.actions[int(a)]
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    low, high = np.asarray(spec.action_low), np.asarray(spec.action_high)
    if a.shape != low.shape or np.any(a < low - 1e-12) or np.any(a > high + 1e-12):
        raise ValueError(f"action {a} outside the box [{low}, {high}]")
    return a


def env_reset(spec: EnvSpec, rng: np.random.Generator) -> np.ndarray:
    return dynamics(spec).reset(spec, rng)


def env_step(spec: EnvSpec, s, a, rng: np.random.Generator) -> Transition:
    """Advance internal state ``s`` by one control step."""
    dyn = dynamics(spec)
    value = action_value(spec, a)
    s_next, r, absorbing = dyn.advance(spec, s, value, rng)
    return Transition(dyn.observe(spec, s), a, float(r), dyn.observe(spec, s_next), bool(absorbing))


class Episode:
    """Stateful runner: tracks the internal state and the horizon count."""

    def __init__(self, spec: EnvSpec, rng: np.random.Generator, task: int | None = None):
        self.spec = spec
        self.rng = rng
        self.task = task
        self._dyn = dynamics(spec)
        self.state = None
        self.steps = 0
        self.done = True

    def reset(self) -> np.ndarray:
        self.state = self._dyn.reset(self.spec, self.rng)
        self.steps = 0
        self.done = False
        return self.observation

    @property
    def observation(self) -> np.ndarray:
        return self._dyn.observe(self.spec, self.state)

    def step(self, a) -> Transition:
        if self.done:
            raise RuntimeError("episode finished; call reset()")
        value = action_value(self.spec, a)
        obs = self.observation
        s_next, r, absorbing = self._dyn.advance(self.spec, self.state, value, self.rng)
        self.state = s_next
        self.steps += 1
        truncated = (not absorbing) and self.steps >= self.spec.horizon
        self.done = bool(absorbing or truncated)
        return Transition(obs, a, float(r), self.observation, bool(absorbing), truncated, self.task)


def rk4(deriv, y, h, n_sub=1):
    """Fixed-step RK4 over ``n_sub`` substeps of size ``h / n_sub``."""
    dt = h / n_sub
    for _ in range(n_sub):
        k1 = deriv(y)
        k2 = deriv(y + 0.5 * dt * k1)
        k3 = deriv(y + 0.5 * dt * k2)
        k4 = deriv(y + dt * k3)
        y = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return y


def rk4_tuple(deriv, y, h, n_sub=1):
    """Scalar RK4 on a tuple of floats; far cheaper than numpy for 2-4 states."""
    dt = h / n_sub
    half = 0.5 * dt
    for _ in range(n_sub):
        k1 = deriv(y)
        k2 = deriv(tuple(a + half * b for a, b in zip(y, k1)))
        k3 = deriv(tuple(a + half * b for a, b in zip(y, k2)))
        k4 = deriv(tuple(a + dt * b for a, b in zip(y, k3)))
        y = tuple(a + dt / 6.0 * (b + 2.0 * c + 2.0 * d + e)
                  for a, b, c, d, e in zip(y, k1, k2, k3, k4))
    return y
