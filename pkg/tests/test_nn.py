import numpy as np
import pytest

from mtrl.nn import (AdamState, Dense, DenseNet, LossSpec, NonFiniteError, ShapeError, adam_step,
                     load_net, loss_eval, net_backward, net_forward, save_net)

from helpers import numeric_grad, rel_err


@pytest.mark.parametrize("act", ["relu", "sigmoid", "tanh", "linear"])
def test_backward_matches_finite_differences(act):
    rng = np.random.default_rng(1)
    net = DenseNet.build([3, 7, 5, 2], [act, act, "linear"], rng)
    for layer in net.layers:
        layer.b[:] = rng.normal(0, 0.3, layer.b.shape)
    x = rng.normal(size=(100, 3))
    up = rng.normal(size=(100, 2))

    def f():
        return float(np.sum(net.forward(x) * up))

    grads, dx = net_backward(net, x, up)
    for p, g in zip(net.params(), grads):
        assert rel_err(g, numeric_grad(f, p)) < 1e-4
    x_num = numeric_grad(f, x)
    assert rel_err(dx, x_num) < 1e-4


def test_single_vector_and_batch_agree():
    net = DenseNet.build([4, 6, 3], ["tanh", "linear"], np.random.default_rng(0))
    x = np.random.default_rng(2).normal(size=(5, 4))
    batch = net_forward(net, x)
    assert batch.shape == (5, 3)
    np.testing.assert_allclose(net_forward(net, x[2]), batch[2], rtol=0, atol=1e-15)


def test_empty_net_is_identity():
    net = DenseNet([], width=3)
    x = np.arange(6.0).reshape(2, 3)
    np.testing.assert_array_equal(net.forward(x), x)
    grads, dx = net_backward(net, x, np.ones((2, 3)))
    assert grads == [] and np.array_equal(dx, np.ones((2, 3)))


def test_shape_errors():
    net = DenseNet.build([3, 2], "linear", np.random.default_rng(0))
    with pytest.raises(ShapeError):
        net.forward(np.zeros((4, 5)))
    with pytest.raises(ShapeError):
        DenseNet([Dense(np.zeros((2, 3)), np.zeros(2)), Dense(np.zeros((2, 4)), np.zeros(2))])
    with pytest.raises(ValueError):
        DenseNet.build([3, 2], "softplus", np.random.default_rng(0))


def test_glorot_bounds_and_zero_bias():
    net = DenseNet.build([10, 30], "relu", np.random.default_rng(0))
    limit = np.sqrt(6 / 40)
    assert np.abs(net.layers[0].W).max() <= limit
    assert not net.layers[0].b.any()


def test_adam_first_step_moves_by_lr():
    # bias-corrected first step is lr * g / (|g| + eps)
    p = [np.array([1.0, -2.0, 0.5])]
    g = [np.array([0.3, -4.0, 0.0])]
    state = AdamState.like(p)
    adam_step(p, g, state, lr=0.01)
    np.testing.assert_allclose(p[0], [0.99, -1.99, 0.5], atol=1e-9)
    assert state.t == 1


def test_adam_rejects_nonfinite_gradient_and_names_block():
    p = [np.zeros(2)]
    state = AdamState.like(p)
    with pytest.raises(NonFiniteError, match="shared.layer0.W"):
        adam_step(p, [np.array([np.nan, 0.0])], state, 0.1, names=["shared.layer0.W"])
    assert state.t == 0 and not p[0].any()


def test_loss_values():
    huber = LossSpec("huber", delta=1.0)
    assert loss_eval(huber, 0.5, 0.0) == (0.125, 0.5)
    assert loss_eval(huber, 2.0, 0.0) == (1.5, 1.0)
    assert loss_eval(huber, -2.0, 0.0) == (1.5, -1.0)
    assert loss_eval(LossSpec("mse"), 3.0, 1.0) == (2.0, 2.0)
    v, g = loss_eval(LossSpec("mse", scale=4.0), np.array([2.0]), np.array([0.0]))
    np.testing.assert_allclose([v[0], g[0]], [0.5, 0.5])


def test_loss_rejects_bad_inputs():
    with pytest.raises(NonFiniteError):
        loss_eval(LossSpec(), np.array([np.inf]), np.array([0.0]))
    with pytest.raises(ValueError):
        LossSpec("huber", delta=0.0)
    with pytest.raises(ValueError):
        LossSpec("l1")


def test_snapshot_roundtrip(tmp_path):
    net = DenseNet.build([2, 4, 1], ["sigmoid", "linear"], np.random.default_rng(3))
    save_net(net, tmp_path / "n.npz")
    back = load_net(tmp_path / "n.npz")
    assert back.same_architecture(net)
    for a, b in zip(net.params(), back.params()):
        assert np.array_equal(a, b)


def test_check_finite():
    net = DenseNet.build([2, 2], "linear", np.random.default_rng(0))
    net.layers[0].W[0, 0] = np.nan
    with pytest.raises(NonFiniteError, match="layer0.W"):
        net.check_finite()
