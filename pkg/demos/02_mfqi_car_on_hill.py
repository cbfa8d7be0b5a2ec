"""Batch learning on Car-On-Hill: one shared network for four tasks versus
one network per task, scored against a value-iteration oracle.

A reduced setup (400 transitions, 10 iterations) so it runs in about a
minute. The acceptance runs use 2000 transitions and 50 iterations.
"""
import numpy as np

from mtrl.algos import FQIConfig, collect_dataset, fqi_run
from mtrl.envs import make_task_suite
from mtrl.oracle import build_q_oracle, q_l1_error, rollout_returns, sample_probes

specs = make_task_suite("car_on_hill_8")[:4]
for s in specs:
    print(s.label, s.params)

rng = np.random.default_rng(0)
data = [collect_dataset(s, 400, rng) for s in specs]
print("transitions per task:", [len(d) for d in data])

cfg = FQIConfig(iterations=10, fit_epochs=10, minibatch=100)
shared = fqi_run(data, specs, cfg, np.random.default_rng(1))
single = [fqi_run([d], [s], cfg, np.random.default_rng(2 + t)) for t, (d, s) in enumerate(zip(data, specs))]

# the oracle is a grid value iteration over the 2-d state box
print("\n task            MFQI err  FQI err  MFQI ret  FQI ret")
for t, s in enumerate(specs):
    oracle = build_q_oracle(s, 200)
    probes = sample_probes(s, 50, seed=12345)
    e_m = q_l1_error((shared.net, t), oracle, probes)
    e_s = q_l1_error((single[t].net, 0), oracle, probes)
    r_m = rollout_returns((shared.net, t), s, probes).mean()
    r_s = rollout_returns((single[t].net, 0), s, probes).mean()
    print(f" {s.label:15s} {e_m:8.4f} {e_s:8.4f} {r_m:9.4f} {r_s:8.4f}")
