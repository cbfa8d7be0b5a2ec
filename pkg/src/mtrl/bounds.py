"""Multi-task error-propagation and approximation bounds.

Concentrability coefficients and the universal constants are opaque
user-supplied numbers; nothing here derives them from an MDP.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class BoundInputs:
    gammas: list[float] = field(default_factory=lambda: [0.95])
    K: int = 1
    r_max: list[float] = field(default_factory=lambda: [1.0])
    eps_avg: list[float] = field(default_factory=list)
    # (r, C) pairs; one pair means C does not depend on r
    c_table: list[tuple[float, float]] = field(default_factory=lambda: [(0.0, 1.0)])
    r_grid_points: int = 101
    # iteration-error terms
    c_ae: float = 0.0
    gamma_check: float | None = None
    d: list[float] = field(default_factory=list)
    b: list[list[float]] = field(default_factory=list)
    # approximation-error terms
    c1: float = 1.0
    c2: float = 1.0
    c3: float = 1.0
    c4: float = 1.0
    lip_f: float = 1.0
    lip_h: float = 1.0
    g_w: float = 0.0          # sup over tasks of G(W(X_l))
    sup_w_norm: float = 0.0   # sup_w ||w(X)||
    o_h: float = 0.0
    min_g_h: float = 0.0      # min_p G(H(p))
    sup_hw_norm: float = 0.0  # sup_{h,w} ||h(w(X))||
    o_f: float = 0.0
    n: int = 1
    T: int = 1
    delta: float = 0.05
    eps_star_avg: float = 0.0

    def __post_init__(self):
        self.c_table = [tuple(map(float, row)) for row in self.c_table]
        for g in self.gammas:
            if not 0.0 < g < 1.0:
                raise ValueError("every gamma must lie in (0, 1)")
        for name in ("eps_avg", "r_max", "d"):
            if any(v < 0 for v in getattr(self, name)):
                raise ValueError(f"{name} must be non-negative")
        for r, c in self.c_table:
            if not 0.0 <= r <= 1.0 or c < 0:
                raise ValueError("C table needs r in [0, 1] and C >= 0")

    @property
    def gamma(self) -> float:
        return max(self.gammas)

    @property
    def r_max_avg(self) -> float:
        return float(np.mean(self.r_max))

    @classmethod
    def from_dict(cls, d: dict) -> "BoundInputs":
        return cls(**d)

    @classmethod
    def from_file(cls, path) -> "BoundInputs":
        data = json.loads(Path(path).read_text())
        return cls.from_dict(data.get("inputs", data))

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def alpha_series(gamma: float, K: int) -> np.ndarray:
    """Weights alpha_0..alpha_K; they sum to one."""
    if not 0.0 < gamma < 1.0:
        raise ValueError("gamma must lie in (0, 1)")
    if K < 1:
        raise ValueError("K must be a positive integer")
    norm = 1.0 - gamma ** (K + 1)
    k = np.arange(K)
    alpha = np.empty(K + 1)
    alpha[:K] = (1.0 - gamma) * gamma ** (K - k - 1) / norm
    alpha[K] = (1.0 - gamma) * gamma ** K / norm
    return alpha


def error_functional(alpha, eps, r: float) -> float:
    """sum_k alpha_k^(2r) * eps_k over the first K weights."""
    if not 0.0 <= r <= 1.0:
        raise ValueError("r must lie in [0, 1]")
    eps = np.asarray(eps, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    if len(alpha) != len(eps) + 1:
        raise ValueError(f"need K={len(alpha) - 1} error terms, got {len(eps)}")
    return float(np.sum(alpha[:-1] ** (2 * r) * eps))


def _c_on_grid(inp: BoundInputs):
    if not inp.c_table:
        raise ValueError("the concentrability table is empty")
    grid = np.linspace(0.0, 1.0, inp.r_grid_points)
    table = sorted(inp.c_table)
    rs = np.array([r for r, _ in table])
    cs = np.array([c for _, c in table])
    if len(table) == 1:
        return grid, np.full_like(grid, cs[0])
    if rs[0] > 0.0 or rs[-1] < 1.0:
        raise ValueError("the concentrability table must span r in [0, 1]")
    return grid, np.interp(grid, rs, cs)


def _regression_term(inp: BoundInputs):
    alpha = alpha_series(inp.gamma, inp.K)
    if len(inp.eps_avg) != inp.K:
        raise ValueError(f"need {inp.K} eps_avg values, got {len(inp.eps_avg)}")
    grid, cvals = _c_on_grid(inp)
    vals = np.array([math.sqrt(c) * math.sqrt(error_functional(alpha, inp.eps_avg, r))
                     for r, c in zip(grid, cvals)])
    i = int(np.argmin(vals))
    return float(vals[i]), float(grid[i])


def avi_bound(inp: BoundInputs) -> tuple[float, float]:
    """Task-averaged AVI bound; returns (value, minimizing r)."""
    g = inp.gamma
    reg, r_star = _regression_term(inp)
    tail = 2.0 * g ** inp.K * inp.r_max_avg / (1.0 - g)
    return 2.0 * g / (1.0 - g) ** 2 * (reg + tail), r_star


def api_bound(inp: BoundInputs) -> tuple[float, float]:
    """Task-averaged API bound; ``c_table`` holds C_PI here."""
    g = inp.gamma
    reg, r_star = _regression_term(inp)
    tail = g ** (inp.K - 1) * inp.r_max_avg
    return 2.0 * g / (1.0 - g) ** 2 * (reg + tail), r_star


def eps_star_bound(inp: BoundInputs, k: int) -> float:
    """Bound on the minimal task-averaged regression error at iteration k."""
    if k < 0 or k >= len(inp.d):
        raise ValueError(f"no initial-error term d_{k}")
    total = inp.d[k]
    if k > 0:
        if k >= len(inp.b) or len(inp.b[k]) < k:
            raise ValueError(f"need b_{{{k},0..{k - 1}}}")
        g = inp.gamma_check if inp.gamma_check is not None else inp.gamma
        rate = g * inp.c_ae
        total += sum(rate ** (i + 1) * inp.b[k][k - 1 - i] for i in range(k))
    return total ** 2


def approx_bound_terms(inp: BoundInputs) -> dict:
    if not 0.0 < inp.delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if inp.n < 1 or inp.T < 1:
        raise ValueError("n and T must be at least 1")
    n, T = inp.n, inp.T
    return {
        "input_maps": inp.lip_f * inp.c1 * inp.lip_h * inp.g_w / n,
        "representation": inp.lip_f * inp.c2 * inp.sup_w_norm * inp.o_h / (n * T),
        "representation_offset": inp.lip_f * inp.c3 * inp.min_g_h / (n * T),
        "heads": inp.c4 * inp.sup_hw_norm * inp.o_f / (n * math.sqrt(T)),
        "concentration": math.sqrt(8.0 * math.log(3.0 / inp.delta) / (n * T)),
        "eps_star": inp.eps_star_avg,
    }


def approx_bound_rhs(inp: BoundInputs) -> float:
    return float(sum(approx_bound_terms(inp).values()))


# -- Monte-Carlo complexity estimators ---------------------------------------

def gaussian_complexity_mc(vectors, M: int, rng: np.random.Generator):
    """E[sup_v <g, v>] for a finite set of vectors, g standard normal.

    ``vectors`` has one row per function of the class (already evaluated on
    the data and flattened). Returns (estimate, standard error).
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    if V.shape[0] == 0:
        raise ValueError("the function class is empty")
    if M < 2:
        raise ValueError("need at least two Monte-Carlo samples")
    G = rng.standard_normal((M, V.shape[1]))
    sups = (G @ V.T).max(axis=1)
    return float(sups.mean()), float(sups.std(ddof=1) / math.sqrt(M))


@dataclass
class QuotientEstimate:
    """Largest per-pair Gaussian Lipschitz quotient over the probe pairs.

    Only a lower estimate of the supremum over all input pairs.
    """
    value: float
    stderr: float
    per_pair: list[float]
    per_pair_stderr: list[float]
    lower_estimate: bool = True


def lipschitz_quotient_mc(functions, probes, M: int, rng: np.random.Generator) -> QuotientEstimate:
    if not functions:
        raise ValueError("the function class is empty")
    values, errors = [], []
    for y, y2 in probes:
        y, y2 = np.asarray(y, dtype=np.float64), np.asarray(y2, dtype=np.float64)
        dist = float(np.linalg.norm(y - y2))
        if dist == 0.0:
            raise ValueError("probe pairs must have distinct points")
        diffs = np.stack([np.atleast_1d(np.asarray(f(y), dtype=np.float64) - np.asarray(f(y2), dtype=np.float64))
                          for f in functions])
        est, se = gaussian_complexity_mc(diffs, M, rng)
        values.append(est / dist)
        errors.append(se / dist)
    i = int(np.argmax(values))
    return QuotientEstimate(values[i], errors[i], values, errors)


def write_bound_rows(rows, path) -> None:
    """CSV with columns (bound, inputs_hash, r_star, value)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["bound", "inputs_hash", "r_star", "value"])
        for row in rows:
            w.writerow([row["bound"], row["inputs_hash"],
                        "" if row.get("r_star") is None else repr(row["r_star"]), repr(row["value"])])


def evaluate_all(inp: BoundInputs) -> list[dict]:
    """Every bound computable from ``inp``; missing inputs are skipped."""
    h = inp.digest()
    rows = []
    if len(inp.eps_avg) == inp.K:
        v, r = avi_bound(inp)
        rows.append({"bound": "avi", "inputs_hash": h, "r_star": r, "value": v})
        v, r = api_bound(inp)
        rows.append({"bound": "api", "inputs_hash": h, "r_star": r, "value": v})
    for k in range(len(inp.d)):
        try:
            rows.append({"bound": f"eps_star[{k}]", "inputs_hash": h, "r_star": None,
                         "value": eps_star_bound(inp, k)})
        except ValueError:
            break
    rows.append({"bound": "approx_rhs", "inputs_hash": h, "r_star": None, "value": approx_bound_rhs(inp)})
    return rows
