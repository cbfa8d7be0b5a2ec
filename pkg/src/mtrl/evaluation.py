"""Greedy evaluation, learning curves and cross-seed aggregation."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .envs import EnvSpec, Episode

CSV_COLUMNS = ["algorithm", "suite", "task", "seed", "epoch", "metric_name", "value", "config_hash"]


def greedy_policy(net, task: int):
    """argmax over the Q-head of ``task``; ties go to the lowest index."""
    def act(obs):
        return int(np.argmax(net.forward(task, obs)))
    return act


def evaluate_greedy(policy, spec: EnvSpec, eval_steps: int, rng: np.random.Generator,
                    gamma: float | None = None) -> list[float]:
    """Discounted return of every episode completed within ``eval_steps``.

    The unfinished last episode is dropped, unless no episode finished at
    all, in which case its partial return is the only entry.
    """
    gamma = spec.gamma if gamma is None else gamma
    ep = Episode(spec, rng)
    obs = ep.reset()
    returns, ret, disc = [], 0.0, 1.0
    for _ in range(eval_steps):
        tr = ep.step(policy(obs))
        ret += disc * tr.r
        disc *= gamma
        obs = tr.s_next
        if ep.done:
            returns.append(ret)
            ret, disc = 0.0, 1.0
            obs = ep.reset()
    if not returns:
        returns.append(ret)
    return returns


@dataclass
class LearningCurve:
    """Per-epoch metrics of one run (one seed, one algorithm)."""
    algorithm: str
    suite: str
    tasks: list[str]
    seed: int
    config_hash: str = ""
    rows: list[tuple] = field(default_factory=list)  # (task, epoch, metric, value)

    def add(self, task: str, epoch: int, metric: str, value: float) -> None:
        value = float(value)
        if not math.isfinite(value):
            raise ValueError(f"non-finite {metric} for {task} at epoch {epoch}")
        for t, e, m, _ in reversed(self.rows):
            if t == task and m == metric:
                if epoch <= e:
                    raise ValueError(f"epochs must increase ({task}/{metric}: {e} -> {epoch})")
                break
        self.rows.append((task, int(epoch), metric, value))

    def series(self, task: str, metric: str):
        pts = [(e, v) for t, e, m, v in self.rows if t == task and m == metric]
        if not pts:
            return np.array([], dtype=int), np.array([])
        e, v = zip(*pts)
        return np.array(e), np.array(v)

    def metrics(self) -> list[str]:
        return sorted({m for _, _, m, _ in self.rows})

    def csv_rows(self):
        for t, e, m, v in self.rows:
            yield [self.algorithm, self.suite, t, self.seed, e, m, repr(v), self.config_hash]


def write_curves_csv(curves, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for c in curves:
            w.writerows(c.csv_rows())


def read_curves_csv(path) -> list[LearningCurve]:
    curves: dict[tuple, LearningCurve] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (row["algorithm"], row["suite"], int(row["seed"]), row["config_hash"])
            if key not in curves:
                curves[key] = LearningCurve(row["algorithm"], row["suite"], [], int(row["seed"]),
                                            row["config_hash"])
            c = curves[key]
            if row["task"] not in c.tasks:
                c.tasks.append(row["task"])
            c.rows.append((row["task"], int(row["epoch"]), row["metric_name"], float(row["value"])))
    return list(curves.values())


def mean_ci(values, z: float = 1.96):
    """Mean and normal-approximation half-width z * s / sqrt(R).

    A single run has no spread estimate; its half-width is reported as 0.
    """
    v = np.asarray(values, dtype=np.float64)
    if len(v) < 2:
        return float(v.mean()), 0.0
    return float(v.mean()), float(z * v.std(ddof=1) / math.sqrt(len(v)))


def aggregate_curves(curves) -> list[dict]:
    """Per (task, metric, epoch) mean and 95% CI across runs.

    Runs must share algorithm, suite and config hash; they differ only by seed.
    """
    curves = list(curves)
    if not curves:
        raise ValueError("nothing to aggregate")
    ident = {(c.algorithm, c.suite, c.config_hash) for c in curves}
    if len(ident) != 1:
        raise ValueError(f"runs come from different configurations: {sorted(ident)}")
    buckets: dict[tuple, list[float]] = {}
    for c in curves:
        for t, e, m, v in c.rows:
            buckets.setdefault((t, m, e), []).append(v)
    alg, suite, h = next(iter(ident))
    out = []
    for (t, m, e), vals in sorted(buckets.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])):
        mean, half = mean_ci(vals)
        out.append({"algorithm": alg, "suite": suite, "task": t, "metric_name": m, "epoch": e,
                    "mean": mean, "ci_low": mean - half, "ci_high": mean + half,
                    "half_width": half, "n_runs": len(vals), "degenerate": len(vals) < 2,
                    "config_hash": h})
    return out


def paired_one_sided_p(better, worse) -> float:
    """p-value of a paired t-test for mean(better - worse) > 0."""
    better = np.asarray(better, dtype=np.float64)
    worse = np.asarray(worse, dtype=np.float64)
    diff = better - worse
    if np.allclose(diff, diff[0]):
        return 0.0 if diff[0] > 0 else 1.0
    return float(stats.ttest_rel(better, worse, alternative="greater").pvalue)


def intervals_disjoint(a, b) -> bool:
    """True when the 95% intervals of two samples do not overlap."""
    ma, ha = mean_ci(a)
    mb, hb = mean_ci(b)
    return (ma + ha < mb - hb) or (mb + hb < ma - ha)
