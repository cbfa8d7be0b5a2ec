from .base import (Dynamics, EnvSpec, Episode, Transition, action_value, dynamics,
                   env_reset, env_step)
from . import tasks
from .suites import (CAR_ON_HILL_TASKS, SUITES, acrobot, car_on_hill, cart_pole, chain,
                     export_suite, import_suite, inverted_pendulum, make_task_suite,
                     mountain_car, suite_subset, torque_pendulum)

__all__ = [
    "Dynamics", "EnvSpec", "Episode", "Transition", "action_value", "dynamics",
    "env_reset", "env_step", "tasks", "CAR_ON_HILL_TASKS", "SUITES", "acrobot",
    "car_on_hill", "cart_pole", "chain", "export_suite", "import_suite",
    "inverted_pendulum", "make_task_suite", "mountain_car", "suite_subset",
    "torque_pendulum",
]
