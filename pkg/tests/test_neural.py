import numpy as np
import pytest

from rfibench.errors import ContractViolation
from rfibench.neural import (
    LSTM,
    Adam,
    Dense,
    Dropout,
    LastStep,
    Network,
    Parallel,
    build_network,
    gradient_check,
    load_weights,
    mlp,
    random_composition,
    save_weights,
)


def test_identity_linear():
    layer = Dense(3, 3, "linear")
    layer.W[...] = np.eye(3)
    layer.b[...] = 0.0
    x = np.array([[1.0, -2.0, 0.5]])
    assert np.array_equal(Network([layer]).forward(x), x)


def test_tanh_output_range():
    rng = np.random.default_rng(0)
    net = mlp(4, [16, 16], 3, out_activation="tanh", rng=rng)
    for p in net.params():
        p *= 10.0
    y = net.forward(rng.normal(0, 10, (500, 4)))
    assert np.all(np.abs(y) <= 1.0)
    assert np.all(np.isfinite(y))


def test_zero_lstm_gives_zero_state():
    lstm = LSTM(3, 4, forget_bias=0.0)
    for p in lstm.params():
        p[...] = 0.0
    h = lstm.forward(np.random.default_rng(1).normal(size=(2, 6, 3)))
    assert np.array_equal(h, np.zeros((2, 6, 4)))


def test_linear_gradient_pattern():
    layer = Dense(3, 2, "linear", np.random.default_rng(2))
    x = np.array([[1.0, 2.0, -3.0]])
    y = layer.forward(x)
    dx = layer.backward(np.ones_like(y))
    assert np.allclose(layer.dW, np.outer(x[0], np.ones(2)))
    assert np.allclose(layer.db, np.ones(2))
    assert np.allclose(dx[0], layer.W.sum(axis=1))


def test_mlp_gradient_check():
    rng = np.random.default_rng(3)
    net = mlp(5, [8, 8], 3, activation="tanh", out_activation="tanh", rng=rng)
    err = gradient_check(net, rng.normal(size=(4, 5)), rng)
    assert err <= 1e-4


def test_relu_mlp_gradient_check():
    rng = np.random.default_rng(4)
    net = mlp(4, [6, 6], 2, activation="relu", rng=rng)
    for p in net.params():
        p += rng.normal(0, 0.1, p.shape)
    assert gradient_check(net, rng.normal(size=(3, 4)), rng) <= 1e-4


def test_lstm_gradient_check_length_five():
    rng = np.random.default_rng(5)
    net = Network([LSTM(3, 4, rng), LastStep(4), Dense(4, 2, "tanh", rng)])
    assert gradient_check(net, rng.normal(size=(2, 5, 3)), rng) <= 1e-4


def test_parallel_gradient_check():
    rng = np.random.default_rng(6)
    branches = [Network([Dense(3, 2, "tanh", rng)]), Network([Dense(3, 4, "linear", rng)])]
    net = Network([Parallel(branches), Dense(6, 1, "linear", rng)])
    assert gradient_check(net, rng.normal(size=(3, 3)), rng) <= 1e-4


@pytest.mark.parametrize("seed", range(20))
def test_random_composition_gradients(seed):
    rng = np.random.default_rng(100 + seed)
    net, x = random_composition(rng)
    assert gradient_check(net, x, rng) <= 1e-4


def test_dropout_eval_identity():
    d = Dropout(0.5, 4)
    x = np.random.default_rng(7).normal(size=(10, 4))
    assert np.array_equal(d.forward(x, train=False), x)


def test_dropout_train_scaling_and_expectation():
    d = Dropout(0.3, 1)
    x = np.ones((200_000, 1))
    y = d.forward(x, train=True, rng=np.random.default_rng(8))
    survivors = y[y != 0]
    assert np.allclose(survivors, 1.0 / 0.7)
    assert abs(y.mean() - 1.0) < 0.01


def test_dropout_train_needs_rng():
    with pytest.raises(ContractViolation):
        Dropout(0.2, 2).forward(np.ones((1, 2)), train=True)


def test_dropout_rate_bounds():
    with pytest.raises(ContractViolation):
        Dropout(1.0, 2)
    with pytest.raises(ContractViolation):
        Dropout(-0.1, 2)


def test_forward_backward_deterministic():
    def run():
        rng = np.random.default_rng(9)
        net = mlp(3, [5], 2, rng=rng, dropout=0.2)
        y = net.forward(np.ones((4, 3)), train=True, rng=np.random.default_rng(1))
        dx = net.backward(np.ones_like(y))
        return y, dx, [g.copy() for g in net.grads()]

    a, b = run(), run()
    assert np.array_equal(a[0], b[0])
    assert np.array_equal(a[1], b[1])
    assert all(np.array_equal(x, y) for x, y in zip(a[2], b[2]))


def test_adam_first_step_magnitude():
    p = np.array([1.0, -2.0, 0.3])
    opt = Adam([p], lr=0.1)
    opt.step([np.array([0.5, -3.0, 7.0])])
    assert np.allclose(p, [0.9, -1.9, 0.2], atol=1e-6)
    assert opt.t == 1


def test_adam_zero_gradient():
    q = np.array([1.0, 2.0])
    fresh = Adam([q], lr=0.1)
    fresh.step([np.zeros(2)])
    assert np.array_equal(q, [1.0, 2.0])

    opt = Adam([np.array([1.0, 2.0])], lr=0.1)
    opt.step([np.array([1.0, -1.0])])
    m, v = opt.m[0].copy(), opt.v[0].copy()
    opt.step([np.zeros(2)])
    assert np.allclose(opt.m[0], 0.9 * m)
    assert np.allclose(opt.v[0], 0.999 * v)


def test_adam_quadratic():
    x = np.array([1.0])
    opt = Adam([x], lr=0.05)
    for _ in range(500):
        opt.step([2.0 * x])
    assert abs(x[0]) < 0.05


def test_adam_shape_mismatch():
    opt = Adam([np.zeros(3)])
    with pytest.raises(ContractViolation):
        opt.step([np.zeros(2)])
    with pytest.raises(ContractViolation):
        opt.step([])


def test_adam_grad_clip():
    p = np.zeros(2)
    opt = Adam([p], lr=0.1, grad_clip=1.0)
    norm = opt.step([np.array([30.0, 40.0])])
    assert norm == pytest.approx(50.0)


def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(10)
    actor = mlp(4, [8], 2, out_activation="tanh", rng=rng)
    enc = Network([LSTM(3, 5, rng), LastStep(5), Dense(5, 2, "linear", rng)])
    path = tmp_path / "w.rfiw"
    save_weights({"actor": actor, "enc": enc}, path, extra={"k": 1})
    assert path.read_bytes()[:4] == b"RFIW"
    nets, extra = load_weights(path)
    assert extra == {"k": 1}
    assert np.array_equal(nets["actor"].get_flat(), actor.get_flat())
    assert np.array_equal(nets["enc"].get_flat(), enc.get_flat())
    x = rng.normal(size=(2, 4, 3))
    assert np.array_equal(nets["enc"].forward(x), enc.forward(x))


def test_checkpoint_rejects_bad_magic(tmp_path):
    net = mlp(2, [3], 1)
    path = tmp_path / "w.rfiw"
    save_weights({"n": net}, path)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"XXXX"
    path.write_bytes(bytes(raw))
    with pytest.raises(ContractViolation):
        load_weights(path)


def test_backward_without_forward():
    net = mlp(2, [3], 1)
    with pytest.raises(ContractViolation):
        net.backward(np.ones((1, 1)))
    net.forward(np.ones((1, 2)))
    net.backward(np.ones((1, 1)))
    with pytest.raises(ContractViolation):
        net.backward(np.ones((1, 1)))


def test_shape_mismatch():
    net = mlp(3, [4], 1)
    with pytest.raises(ContractViolation):
        net.forward(np.ones((2, 5)))
    with pytest.raises(ContractViolation):
        Network([Dense(3, 4), Dense(5, 1)])
    with pytest.raises(ContractViolation):
        LSTM(2, 3).forward(np.ones((4, 2)))


def test_spec_roundtrip_and_clone():
    rng = np.random.default_rng(11)
    net = mlp(3, [4, 4], 2, rng=rng, dropout=0.1)
    assert build_network(net.spec()).spec() == net.spec()
    twin = net.clone()
    assert np.array_equal(twin.get_flat(), net.get_flat())


def test_polyak_update():
    a = mlp(2, [3], 1, rng=np.random.default_rng(0))
    b = mlp(2, [3], 1, rng=np.random.default_rng(1))
    expect = 0.25 * b.get_flat() + 0.75 * a.get_flat()
    a.copy_from(b, tau=0.25)
    assert np.allclose(a.get_flat(), expect)


def test_flat_roundtrip():
    net = mlp(2, [3], 2)
    flat = np.arange(net.n_params, dtype=float)
    net.set_flat(flat)
    assert np.array_equal(net.get_flat(), flat)
    with pytest.raises(ContractViolation):
        net.set_flat(np.zeros(net.n_params + 1))
