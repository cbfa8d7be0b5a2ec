import numpy as np
import pytest

from mtrl.envs import chain, make_task_suite
from mtrl.evaluation import (LearningCurve, aggregate_curves, evaluate_greedy, intervals_disjoint,
                             mean_ci, paired_one_sided_p, read_curves_csv, write_curves_csv)


def test_greedy_evaluation_on_chain():
    spec = chain(gamma=0.9, horizon=10)
    policy = lambda s: 1 if s[0] < 0.5 else 0  # noqa: E731
    rets = evaluate_greedy(policy, spec, 25, np.random.default_rng(0))
    expected = sum(0.9 ** k for k in range(1, 10))
    assert len(rets) == 2 and rets[0] == pytest.approx(expected)


def test_partial_episode_used_only_when_nothing_finished():
    spec = chain(gamma=0.5, horizon=100)
    rets = evaluate_greedy(lambda s: 1, spec, 4, np.random.default_rng(0))
    assert rets == [0.0]


def test_curve_rules(tmp_path):
    c = LearningCurve("mdqn", "mdqn_5", ["a"], 1, "h")
    c.add("a", 0, "return", 1.0)
    c.add("a", 1, "return", 2.0)
    with pytest.raises(ValueError):
        c.add("a", 1, "return", 3.0)
    with pytest.raises(ValueError):
        c.add("a", 2, "return", float("nan"))
    write_curves_csv([c], tmp_path / "c.csv")
    back = read_curves_csv(tmp_path / "c.csv")
    assert back[0].rows == c.rows and back[0].config_hash == "h"
    header = (tmp_path / "c.csv").read_text().splitlines()[0]
    assert header == "algorithm,suite,task,seed,epoch,metric_name,value,config_hash"


def _curves(values, h="h"):
    out = []
    for seed, v in enumerate(values):
        c = LearningCurve("x", "s", ["t"], seed, h)
        c.add("t", 1, "return", v)
        out.append(c)
    return out


def test_aggregate_single_seed_and_identical():
    row = aggregate_curves(_curves([3.5]))[0]
    assert row["mean"] == 3.5 and row["degenerate"]
    row = aggregate_curves(_curves([2.0] * 4))[0]
    assert row["half_width"] == 0.0 and not row["degenerate"]


def test_ci_half_width_for_unit_noise():
    widths = [mean_ci(np.random.default_rng(s).standard_normal(100))[1] for s in range(200)]
    assert np.mean(widths) == pytest.approx(0.196, abs=0.005)


def test_aggregate_rejects_mixed_configs():
    with pytest.raises(ValueError):
        aggregate_curves(_curves([1.0]) + _curves([2.0], h="other"))


def test_paired_test_and_intervals():
    rng = np.random.default_rng(0)
    base = rng.normal(size=20)
    assert paired_one_sided_p(base + 1.0 + 0.1 * rng.normal(size=20), base) < 1e-6
    assert paired_one_sided_p(base, base + 1.0) > 0.99
    assert intervals_disjoint(np.ones(5) + 0.01 * np.arange(5), np.zeros(5))
    assert not intervals_disjoint(rng.normal(size=10), rng.normal(size=10))
