"""Reusing a trained trunk on a new task.

Pretrain on cart-pole and mountain car, then learn Acrobot alone from
scratch or with the transplanted trunk kept frozen.
"""
import numpy as np

from mtrl.algos import DQNConfig, TransferMode, mdqn_train, run_transfer
from mtrl.envs import make_task_suite

cart, acro, car = make_task_suite("mdqn_5")[:3]
cfg = DQNConfig(epochs=3, steps_per_epoch=500, eval_steps=500, eps_decay_steps=1500)

pre = mdqn_train([cart, car], cfg, seed=0)
print("pretraining done; trunk widths", [p.shape for p in pre.net.shared.params()][::2])

for text in ["scratch", "no_unfreeze", "unfreeze_at(1)"]:
    mode = TransferMode.parse(text)
    print(text, "trunk frozen in epochs 1..3:", [mode.frozen(e) for e in (1, 2, 3)])
    curve = run_transfer(pre.net.shared, acro, mode, cfg, seed=0)
    _, v = curve.series(acro.label, "return")
    print(f"  returns {np.round(v, 2)}  mean over epochs 1-3 {v[1:].mean():.2f}")
