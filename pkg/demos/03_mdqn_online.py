"""Online multi-task DQN on two classic-control tasks.

One environment step per task per algorithm step, one update on a batch
with an equal share from each task's replay memory. Short run: 5 epochs.
"""
from mtrl.algos import DQNConfig, mdqn_train
from mtrl.envs import make_task_suite

specs = make_task_suite("mdqn_5")[:2]
cfg = DQNConfig(epochs=5, steps_per_epoch=500, eval_steps=500, eps_decay_steps=1500)

res = mdqn_train(specs, cfg, seed=0)
print("env steps per task:", res.env_steps)
for s in specs:
    epochs, values = res.curve.series(s.label, "return")
    print(s.label, " ".join(f"{v:7.2f}" for v in values))

# the same trainer with a single task is plain DQN on the same architecture
single = mdqn_train(specs[:1], cfg, seed=0)
print("single-task run is named", single.curve.algorithm)
