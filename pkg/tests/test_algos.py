import numpy as np
import pytest

from mtrl.algos import (DDPGConfig, DQNConfig, EpsilonSchedule, FQIConfig, OuNoise, TransferMode,
                        bellman_targets, fqi_run, mddpg_train, mdqn_train, run_transfer, to_env_action)
from mtrl.algos.ddpg import build_actor_critic, policy_gradient_batches
from mtrl.algos.fqi import equalize
from mtrl.envs import Transition, chain, make_task_suite, torque_pendulum
from mtrl.mtnet import build_preset, save_mtnet
from mtrl.oracle import build_q_oracle
from mtrl.replay import SampleBatch

from helpers import numeric_grad, rel_err

TINY_Q = {"input": [8], "shared": [8, 8]}
TINY_AC = {"input": [8], "shared": [8]}


class Table:
    """Q-table keyed by rounded chain state, shaped like a network."""

    def __init__(self, q):
        self.q = np.asarray(q, dtype=np.float64)

    def forward(self, task, s):
        return self.q[np.rint(np.asarray(s)[:, 0]).astype(int)]


def test_epsilon_schedule():
    eps = EpsilonSchedule(1.0, 0.01, 5000)
    assert eps(0) == 1.0 and eps(5000) == 0.01 and eps(10**6) == 0.01
    assert eps(2500) == pytest.approx(0.505, abs=1e-12)
    vals = [eps(s) for s in range(0, 6000, 37)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_ou_without_noise_decays_geometrically():
    ou = OuNoise(2, np.random.default_rng(0), theta=0.15, sigma=0.0)
    ou.x = np.array([1.0, -2.0])
    for k in range(1, 6):
        np.testing.assert_allclose(ou.sample(), np.array([1.0, -2.0]) * 0.85 ** k, rtol=1e-12)


def test_bellman_targets_basic():
    b = SampleBatch(np.zeros((2, 1)), np.zeros(2, dtype=int), np.array([1.0, 0.0]),
                    np.array([[1.0], [1.0]]), np.array([True, False]))
    net = Table([[0.0, 0.0], [2.0, 1.0]])
    y = bellman_targets(net, [b], [0.95])[0]
    np.testing.assert_allclose(y, [1.0, 1.9])


def test_iterated_targets_reach_chain_optimum():
    spec = chain(gamma=0.9)
    s = np.array([[0.0], [0.0], [1.0], [1.0]])
    a = np.array([0, 1, 0, 1])
    b = SampleBatch(s, a, np.array([0.0, 0.0, 1.0, 0.0]), np.array([[0.0], [1.0], [1.0], [0.0]]),
                    np.zeros(4, dtype=bool))
    q = np.zeros((2, 2))
    for _ in range(400):
        y = bellman_targets(Table(q), [b], [spec.gamma])[0]
        q = np.zeros((2, 2))
        q[s[:, 0].astype(int), a] = y
    oracle = build_q_oracle(spec, 2, tol=1e-13)
    np.testing.assert_allclose(q, oracle.q, atol=1e-9)


def _chain_data(n_rep=25):
    out = []
    for s in (0, 1):
        for a in (0, 1):
            nxt = s if a == 0 else 1 - s
            r = 1.0 if (s == 1 and a == 0) else 0.0
            out += [Transition(np.array([float(s)]), a, r, np.array([float(nxt)]), False)] * n_rep
    return out


def test_fqi_zero_iterations_returns_initialization():
    rng = np.random.default_rng(0)
    res = fqi_run([_chain_data()], [chain()], FQIConfig(iterations=0), rng)
    init = res.snapshots[0][1]
    assert len(res.snapshots) == 1
    assert all(np.array_equal(p, q) for p, q in zip(init.params(), res.net.params()))


def test_fqi_recovers_chain_policy_and_leaves_data_alone():
    data = _chain_data()
    before = [(t.s.copy(), t.a, t.r) for t in data]
    res = fqi_run([data], [chain()], FQIConfig(iterations=40, fit_epochs=20, lr=1e-2),
                  np.random.default_rng(1))
    greedy = np.argmax(res.net.forward(0, np.array([[0.0], [1.0]])), axis=1)
    assert list(greedy) == [1, 0]
    assert len(res.snapshots) == 41
    assert all(np.array_equal(t.s, s) and t.a == a and t.r == r for t, (s, a, r) in zip(data, before))


def test_equalize_and_empty():
    rng = np.random.default_rng(0)
    out = equalize([list(range(10)), list(range(4))], rng)
    assert [len(d) for d in out] == [4, 4]
    with pytest.raises(ValueError):
        fqi_run([[]], [chain()], FQIConfig(), rng)


def _tiny_dqn(**kw):
    base = dict(epochs=2, steps_per_epoch=40, eval_steps=30, batch_per_task=8, capacity=200,
                warmup=10, target_update=10, eps_decay_steps=50, widths=TINY_Q)
    base.update(kw)
    return DQNConfig(**base)


def test_mdqn_one_step_per_task_and_curve_shape():
    specs = make_task_suite("mdqn_5")
    res = mdqn_train(specs, _tiny_dqn(), seed=3)
    assert res.env_steps == [80] * 5
    for s in specs:
        epochs, vals = res.curve.series(s.label, "return")
        assert list(epochs) == [0, 1, 2] and np.all(np.isfinite(vals))


def test_mdqn_is_deterministic_and_single_task_named_dqn():
    spec = make_task_suite("mdqn_5")[0]
    a = mdqn_train([spec], _tiny_dqn(), seed=4)
    b = mdqn_train([spec], _tiny_dqn(), seed=4)
    assert a.curve.rows == b.curve.rows and a.curve.algorithm == "dqn"


def test_dqn_config_checks():
    with pytest.raises(ValueError):
        DQNConfig(batch_per_task=10, capacity=5)
    with pytest.raises(ValueError):
        mdqn_train([torque_pendulum()], _tiny_dqn(), 0)
    with pytest.raises(ValueError):
        mddpg_train([chain()], DDPGConfig(), 0)


def test_ddpg_actor_gradient_matches_finite_differences():
    rng = np.random.default_rng(5)
    specs = make_task_suite("pendulum_family_3")[:2]
    cfg = DDPGConfig(actor_widths=TINY_AC, critic_widths=TINY_AC)
    actor, critic = build_actor_critic(specs, rng, cfg)
    states = [rng.normal(size=(6, 3)) for _ in specs]

    def objective():
        total = sum(len(s) for s in states)
        return -sum(float(critic.forward(t, s, actor.forward(t, s)).sum()) for t, s in enumerate(states)) / total

    grads, _ = actor.gradients(policy_gradient_batches(actor, critic, states))
    for p, g in zip(actor.shared.params(), grads["shared"]):
        assert rel_err(g, numeric_grad(objective, p)) < 1e-3
    for t in range(2):
        for p, g in zip(actor.heads[t].params() + actor.input_blocks[t].params(),
                        grads["head"][t] + grads["input"][t]):
            assert rel_err(g, numeric_grad(objective, p)) < 1e-3


def test_actor_outputs_stay_in_action_box():
    spec = torque_pendulum()
    rng = np.random.default_rng(6)
    actor, _ = build_actor_critic([spec], rng, DDPGConfig(actor_widths=TINY_AC, critic_widths=TINY_AC))
    a = to_env_action(spec, actor.forward(0, rng.normal(0, 50, size=(10_000, 3))))
    assert a.min() >= -2.0 and a.max() <= 2.0


def test_mddpg_runs_and_is_deterministic():
    specs = make_task_suite("pendulum_family_3")
    cfg = DDPGConfig(epochs=1, steps_per_epoch=30, eval_steps=20, batch_per_task=8, warmup=8,
                     capacity=100, actor_widths=TINY_AC, critic_widths=TINY_AC)
    c1, a1, _ = mddpg_train(specs, cfg, 2)
    c2, a2, _ = mddpg_train(specs, cfg, 2)
    assert c1.rows == c2.rows and c1.algorithm == "mddpg"
    assert all(np.array_equal(p, q) for p, q in zip(a1.params(), a2.params()))


def test_transfer_mode_parsing():
    m = TransferMode.parse("unfreeze_at(10)")
    assert (m.kind, m.epoch) == ("unfreeze_at", 10) and str(m) == "unfreeze_at(10)"
    assert [m.frozen(e) for e in (1, 10, 11)] == [True, True, False]
    assert TransferMode.parse("no_unfreeze").frozen(10**6)
    assert not TransferMode.parse("unfreeze_0").frozen(1)
    with pytest.raises(ValueError):
        TransferMode.parse("thaw")


@pytest.fixture
def snapshot(tmp_path):
    net = build_preset("mdqn_q", [4, 2], [2, 3], np.random.default_rng(7), widths=TINY_Q)
    for p in net.shared.params():
        p += 0.3
    path = tmp_path / "pre.npz"
    save_mtnet(net, path)
    return path, net


def _trunk_of(curve_fn):
    captured = {}
    import mtrl.algos.transfer as tr
    orig = tr.mdqn_train

    def spy(*a, **k):
        res = orig(*a, **k)
        captured["net"] = res.net
        return res
    tr.mdqn_train = spy
    try:
        curve = curve_fn()
    finally:
        tr.mdqn_train = orig
    return curve, captured["net"]


def test_no_unfreeze_keeps_snapshot_trunk(snapshot):
    path, src = snapshot
    target = make_task_suite("mdqn_5")[1]
    _, net = _trunk_of(lambda: run_transfer(path, target, TransferMode("no_unfreeze"), _tiny_dqn(), 0))
    assert all(np.array_equal(a, b) for a, b in zip(src.shared.params(), net.shared.params()))


def test_unfreeze_at_toggles_at_boundary(snapshot):
    path, src = snapshot
    target = make_task_suite("mdqn_5")[1]
    mode = TransferMode("unfreeze_at", 2)
    _, net2 = _trunk_of(lambda: run_transfer(path, target, mode, _tiny_dqn(epochs=2), 0))
    _, net3 = _trunk_of(lambda: run_transfer(path, target, mode, _tiny_dqn(epochs=3), 0))
    assert all(np.array_equal(a, b) for a, b in zip(src.shared.params(), net2.shared.params()))
    assert not all(np.array_equal(a, b) for a, b in zip(src.shared.params(), net3.shared.params()))


def test_scratch_ignores_snapshot(snapshot, tmp_path):
    path, _ = snapshot
    target = make_task_suite("mdqn_5")[1]
    a = run_transfer(path, target, TransferMode("scratch"), _tiny_dqn(), 0)
    b = run_transfer(tmp_path / "missing.npz", target, TransferMode("scratch"), _tiny_dqn(), 0)
    c = mdqn_train([target], _tiny_dqn(), 0).curve
    assert a.rows == b.rows == c.rows


def test_transfer_trunk_mismatch(tmp_path):
    net = build_preset("mdqn_q", [4], [2], np.random.default_rng(0), widths={"input": [8], "shared": [9, 8]})
    save_mtnet(net, tmp_path / "bad.npz")
    with pytest.raises(ValueError):
        run_transfer(tmp_path / "bad.npz", make_task_suite("mdqn_5")[1], TransferMode("unfreeze_0"),
                     _tiny_dqn(), 0)
