"""Named task suites."""
from __future__ import annotations

import json
from pathlib import Path

from . import tasks as T
from .base import EnvSpec

# (mass, action magnitude) per Car-On-Hill task, in table order
CAR_ON_HILL_TASKS = [(1.0, 4.0), (0.8, 4.0), (1.0, 4.5), (1.2, 4.5),
                     (1.0, 4.125), (1.0, 4.25), (0.8, 4.375), (0.85, 4.0)]

SUITES = ("car_on_hill_8", "mdqn_5", "pendulum_family_3")


def car_on_hill(mass=1.0, magnitude=4.0, gamma=0.95, horizon=100, label=""):
    return EnvSpec("car_on_hill", {"mass": mass, "magnitude": magnitude}, obs_dim=2,
                   gamma=gamma, horizon=horizon, dt=T.CAR_ON_HILL["dt"],
                   actions=(-magnitude, magnitude), label=label or f"car_on_hill(m={mass},a={magnitude})")


def cart_pole(gamma=0.99, horizon=500):
    return EnvSpec("cart_pole", {}, obs_dim=4, gamma=gamma, horizon=horizon,
                   dt=T.CART_POLE["dt"], actions=(-T.CART_POLE["force"], T.CART_POLE["force"]),
                   label="cart_pole")


def acrobot(gamma=0.99, horizon=1000):
    return EnvSpec("acrobot", {}, obs_dim=6, gamma=gamma, horizon=horizon,
                   dt=T.ACROBOT["dt"], actions=T.ACROBOT["torques"], label="acrobot")


def mountain_car(gamma=0.99, horizon=1000):
    return EnvSpec("mountain_car", {}, obs_dim=2, gamma=gamma, horizon=horizon,
                   dt=1.0, actions=T.MOUNTAIN_CAR["throttle"], label="mountain_car")


def inverted_pendulum(gamma=0.95, horizon=3000):
    return EnvSpec("inverted_pendulum", {}, obs_dim=2, gamma=gamma, horizon=horizon,
                   dt=T.INVERTED_PENDULUM["dt"], actions=T.INVERTED_PENDULUM["forces"],
                   label="inverted_pendulum")


def torque_pendulum(mass=1.0, gamma=0.99, horizon=200):
    k = T.TORQUE_PENDULUM["max_torque"]
    return EnvSpec("torque_pendulum", {"mass": mass}, obs_dim=3, gamma=gamma, horizon=horizon,
                   dt=T.TORQUE_PENDULUM["dt"], action_low=(-k,), action_high=(k,),
                   label=f"torque_pendulum(m={mass})")


def chain(gamma=0.9, horizon=50):
    return EnvSpec("chain", {}, obs_dim=1, gamma=gamma, horizon=horizon, dt=1.0,
                   actions=(0.0, 1.0), label="chain")


def make_task_suite(name: str) -> list[EnvSpec]:
    if name == "car_on_hill_8":
        return [car_on_hill(m, a, label=f"car_on_hill_{i + 1}")
                for i, (m, a) in enumerate(CAR_ON_HILL_TASKS)]
    if name == "mdqn_5":
        return [cart_pole(0.99, 500), acrobot(0.99, 1000), mountain_car(0.99, 1000),
                car_on_hill(1.0, 4.0, 0.95, 100, label="car_on_hill"),
                inverted_pendulum(0.95, 3000)]
    if name == "pendulum_family_3":
        return [torque_pendulum(m) for m in T.TORQUE_PENDULUM["masses"]]
    raise KeyError(f"unknown suite {name!r}; known: {', '.join(SUITES)}")


def suite_subset(name: str, tasks=None) -> list[EnvSpec]:
    """Suite restricted to 1-based task numbers (``None`` keeps all)."""
    specs = make_task_suite(name)
    if tasks is None:
        return specs
    return [specs[i - 1] for i in tasks]


def export_suite(specs, path) -> None:
    Path(path).write_text(json.dumps({"version": 1, "tasks": [s.to_dict() for s in specs]}, indent=2))


def import_suite(path) -> list[EnvSpec]:
    data = json.loads(Path(path).read_text())
    return [EnvSpec.from_dict(d) for d in data["tasks"]]
