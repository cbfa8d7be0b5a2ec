"""Optimal Q-functions by grid value iteration, and the Q-error metrics.

The state box is covered by a regular grid; successor values are read off
the grid with multilinear interpolation. Only deterministic tasks with
discrete actions and a bounded state box are supported.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np
from scipy import sparse

from .envs import EnvSpec, dynamics


class OracleConvergenceError(RuntimeError):
    pass


def _interp_matrix(grids, points):
    """Sparse (n_points, n_nodes) multilinear interpolation weights.

    Points outside the grid are clamped onto its boundary.
    """
    points = np.atleast_2d(points)
    n, d = points.shape
    shape = [len(g) for g in grids]
    lo_idx, frac = [], []
    for k, g in enumerate(grids):
        x = np.clip(points[:, k], g[0], g[-1])
        i = np.clip(np.searchsorted(g, x, side="right") - 1, 0, len(g) - 2)
        lo_idx.append(i)
        frac.append((x - g[i]) / (g[i + 1] - g[i]))
    strides = np.cumprod([1] + shape[::-1][:-1])[::-1]
    rows, cols, vals = [], [], []
    for corner in product((0, 1), repeat=d):
        w = np.ones(n)
        flat = np.zeros(n, dtype=np.int64)
        for k, bit in enumerate(corner):
            w = w * (frac[k] if bit else 1.0 - frac[k])
            flat += (lo_idx[k] + bit) * strides[k]
        rows.append(np.arange(n))
        cols.append(flat)
        vals.append(w)
    return sparse.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                             shape=(n, int(np.prod(shape))))


@dataclass
class QOracle:
    spec: EnvSpec
    grids: list
    q: np.ndarray                 # (n_nodes, n_actions)
    residuals: list = field(default_factory=list)
    mode: str = "lookahead"       # or "multilinear"

    @property
    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*self.grids, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    @property
    def v(self) -> np.ndarray:
        return self.q.max(axis=1)

    def values(self, states) -> np.ndarray:
        """Q*(s, a) for every action at the given states."""
        states = np.atleast_2d(np.asarray(states, dtype=np.float64))
        if self.mode == "multilinear":
            return np.asarray(_interp_matrix(self.grids, states) @ self.q)
        dyn = dynamics(self.spec)
        v = self.v
        out = np.empty((len(states), self.spec.n_actions))
        for a, value in enumerate(self.spec.actions):
            nxt, r, absorbing = dyn.advance_batch(self.spec, states, value)
            out[:, a] = r + self.spec.gamma * np.where(absorbing, 0.0, _interp_matrix(self.grids, nxt) @ v)
        return out

    def greedy(self, states) -> np.ndarray:
        return np.argmax(self.values(states), axis=1)


def build_q_oracle(spec: EnvSpec, resolution, tol: float = 1e-6, max_iter: int = 20000,
                   mode: str = "lookahead") -> QOracle:
    """Value iteration on a regular grid over the task's state box."""
    dyn = dynamics(spec)
    if not spec.discrete or dyn.box is None or not dyn.deterministic:
        raise ValueError(f"{spec.name}: the oracle needs a deterministic, discrete, boxed task")
    box = dyn.box
    if np.isscalar(resolution):
        resolution = [int(resolution)] * len(box)
    grids = [np.linspace(lo, hi, n) for (lo, hi), n in zip(box, resolution)]
    oracle = QOracle(spec, grids, np.zeros((int(np.prod(resolution)), spec.n_actions)), mode=mode)
    nodes = oracle.nodes
    gamma = spec.gamma
    rewards, cont, interp = [], [], []
    for value in spec.actions:
        nxt, r, absorbing = dyn.advance_batch(spec, nodes, value)
        rewards.append(r)
        cont.append(np.where(absorbing, 0.0, gamma))
        interp.append(_interp_matrix(grids, nxt))
    q = oracle.q
    for _ in range(max_iter):
        v = q.max(axis=1)
        q_new = np.stack([rewards[a] + cont[a] * (interp[a] @ v) for a in range(len(spec.actions))], axis=1)
        res = float(np.max(np.abs(q_new - q)))
        oracle.residuals.append(res)
        q = q_new
        if res < tol:
            oracle.q = q
            return oracle
    raise OracleConvergenceError(f"value iteration stopped at residual {res:.3g} after {max_iter} sweeps")


def sample_probes(spec: EnvSpec, n: int, seed: int) -> np.ndarray:
    """``n`` states drawn uniformly from the task's box with a fixed seed."""
    box = dynamics(spec).box
    if box is None:
        raise ValueError(f"{spec.name} has no bounded state box")
    rng = np.random.default_rng(seed)
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    return lo + (hi - lo) * rng.random((n, len(box)))


def _q_table(q, probes):
    if callable(q):
        return np.asarray(q(probes), dtype=np.float64)
    net, task = q
    return np.asarray(net.forward(task, probes), dtype=np.float64)


def q_l1_error(q, oracle: QOracle, probes) -> float:
    """Mean |Q*(s, a) - Q(s, a)| over all probe states and actions.

    ``q`` is either ``(network, task)`` or a callable mapping a batch of
    states to a ``(n, n_actions)`` array.
    """
    return float(np.mean(np.abs(oracle.values(probes) - _q_table(q, probes))))


def rollout_returns(q, spec: EnvSpec, states, first_actions=None, steps: int | None = None) -> np.ndarray:
    """Discounted return of the greedy policy from each start state.

    If ``first_actions`` is given, that action is taken first and the greedy
    policy afterwards, which yields Q^pi(s, a). Uses the batch dynamics.
    """
    dyn = dynamics(spec)
    s = np.array(states, dtype=np.float64, copy=True)
    n = len(s)
    steps = spec.horizon if steps is None else steps
    alive = np.ones(n, dtype=bool)
    ret = np.zeros(n)
    disc = 1.0
    for k in range(steps):
        if not alive.any():
            break
        idx = np.flatnonzero(alive)
        if k == 0 and first_actions is not None:
            acts = np.asarray(first_actions)[idx]
        else:
            acts = np.argmax(_q_table(q, s[idx]), axis=1)
        for a, value in enumerate(spec.actions):
            sel = idx[acts == a]
            if len(sel) == 0:
                continue
            nxt, r, absorbing = dyn.advance_batch(spec, s[sel], value)
            ret[sel] += disc * r
            s[sel] = nxt
            alive[sel[absorbing]] = False
        disc *= spec.gamma
    return ret


def policy_q_values(q, spec: EnvSpec, probes) -> np.ndarray:
    """Q^pi(s, a) of the greedy policy of ``q`` on every probe/action pair."""
    return np.stack([rollout_returns(q, spec, probes, np.full(len(probes), a))
                     for a in range(spec.n_actions)], axis=1)


def policy_q_l1_error(q, oracle: QOracle, probes) -> float:
    """Mean |Q*(s, a) - Q^pi(s, a)| for the greedy policy of ``q``."""
    return float(np.mean(np.abs(oracle.values(probes) - policy_q_values(q, oracle.spec, probes))))
