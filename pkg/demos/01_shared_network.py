"""A tour of the shared-representation network.

Every task gets its own input block and output head; the trunk in the
middle is shared. Run with ``python demos/01_shared_network.py``.
"""
import numpy as np

from mtrl.mtnet import RegressionBatch, build_preset, sync_target, transplant_shared
from mtrl.nn import LossSpec

rng = np.random.default_rng(0)

# three tasks with different state widths and action counts
net = build_preset("mdqn_q", [4, 6, 2], [2, 3, 3], rng, widths={"input": [16], "shared": [16, 16]})
print("tasks:", net.n_tasks)
for name, part in net.sections():
    print(f"  {name:10s}", [p.shape for p in part.params()])

# a forward pass only touches one task's block and head
x = rng.normal(size=(5, 6))
print("Q(task 1) shape:", net.forward(1, x).shape)

# one regression step on an equal-share batch from every task
batch = [RegressionBatch(rng.normal(size=(8, d)), rng.normal(size=8), action=rng.integers(k, size=8))
         for d, k in zip([4, 6, 2], [2, 3, 3])]
loss = LossSpec("mse")
for step in range(5):
    print(f"step {step}: loss {net.update(batch, loss, lr=1e-2):.4f}")

# freezing the trunk leaves it bitwise untouched while the rest still learns
before = [p.copy() for p in net.shared.params()]
net.shared_frozen = True
net.update(batch, loss, lr=1e-2)
print("trunk unchanged while frozen:", all(np.array_equal(a, b) for a, b in zip(before, net.shared.params())))
net.shared_frozen = False

# target networks: soft sync moves a fraction tau of the way
target = net.copy()
net.update(batch, loss, lr=1e-2)
gap = lambda: max(np.abs(a - b).max() for a, b in zip(net.params(), target.params()))  # noqa: E731
g0 = gap()
sync_target(net, target, "soft", 0.1)
print(f"gap before {g0:.2e}, after soft sync {gap():.2e}")

# a fresh single-task net can start from the trained trunk
fresh = build_preset("mdqn_q", [2], [3], np.random.default_rng(1), widths={"input": [16], "shared": [16, 16]})
transplant_shared(net.shared, fresh)
print("trunk transplanted:", all(np.array_equal(a, b) for a, b in zip(net.shared.params(), fresh.shared.params())))
