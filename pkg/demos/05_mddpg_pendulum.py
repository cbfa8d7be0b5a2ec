"""Multi-task DDPG on three torque pendulums of different mass.

Actor and critic both use the shared-trunk layout; the actor ends in tanh
and is rescaled onto each task's torque range.
"""
import numpy as np

from mtrl.algos import DDPGConfig, mddpg_train, to_env_action
from mtrl.envs import make_task_suite

specs = make_task_suite("pendulum_family_3")
W = {"input": [64], "shared": [64]}
cfg = DDPGConfig(epochs=3, steps_per_epoch=1000, eval_steps=400, l2=0.0, actor_widths=W, critic_widths=W)

curve, actor, critic = mddpg_train(specs, cfg, seed=0)
for s in specs:
    _, v = curve.series(s.label, "return")
    print(f"{s.label:24s}", " ".join(f"{x:8.1f}" for x in v))

# actions stay inside the box even far from the usual states
rng = np.random.default_rng(0)
th, om = rng.uniform(-np.pi, np.pi, 1000), rng.uniform(-40, 40, 1000)
obs = np.column_stack([np.cos(th), np.sin(th), om])
a = to_env_action(specs[0], actor.forward(0, obs))
print("torque range seen:", a.min(), a.max(), "allowed:", specs[0].action_low, specs[0].action_high)
