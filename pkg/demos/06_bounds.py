"""The bound calculators: error propagation for approximate value and
policy iteration, the iteration-error bound, and the Monte-Carlo
complexity estimates that feed the approximation bound.
"""
import numpy as np

from mtrl.bounds import (BoundInputs, alpha_series, approx_bound_terms, avi_bound, api_bound,
                         eps_star_bound, gaussian_complexity_mc, lipschitz_quotient_mc)

# weights of the per-iteration errors; later iterations count more
a = alpha_series(0.95, 10)
print("alpha:", np.round(a, 4), "sum", a.sum())

inp = BoundInputs(gammas=[0.9, 0.95], K=10, r_max=[0.5, 1.5], eps_avg=[0.05] * 10,
                  c_table=[(0.0, 2.0), (0.5, 1.0), (1.0, 4.0)])
print("AVI bound %.2f at r=%.2f" % avi_bound(inp))
print("API bound %.2f at r=%.2f" % api_bound(inp))

inp = BoundInputs(gammas=[0.5], c_ae=1.0, d=[1.0, 2.0, 1.0], b=[[], [0.0], [1.0, 1.0]])
print("eps* for k=0..2:", [eps_star_bound(inp, k) for k in range(3)])

# the representation term shrinks like 1/sqrt(T) under the usual scalings
n = 100
for T in (1, 4, 16):
    t = approx_bound_terms(BoundInputs(n=n, T=T, sup_w_norm=np.sqrt(n * T), o_h=1.0))
    print(f"T={T:2d} representation term {t['representation']:.4f}")

# Gaussian complexity of the class {v, -v} is |v| sqrt(2/pi)
rng = np.random.default_rng(0)
v = rng.normal(size=30)
est, se = gaussian_complexity_mc([v, -v], 20000, rng)
print(f"MC {est:.3f} +- {se:.3f}, exact {np.linalg.norm(v) * np.sqrt(2 / np.pi):.3f}")

A = rng.normal(size=(3, 2))
q = lipschitz_quotient_mc([lambda y: A @ y, lambda y: -(A @ y)], [(np.zeros(2), np.ones(2))], 5000, rng)
print("Lipschitz quotient estimate (a lower estimate of the sup):", np.round(q.per_pair, 3))
