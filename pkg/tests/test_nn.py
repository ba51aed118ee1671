"""Gradient, optimizer, and checkpoint tests for the dense networks."""

import numpy as np
import pytest

from lamp.nn import Adam, MLPParams, load_npz, mlp_backward, mlp_forward, mlp_init, polyak_update, save_npz


def numeric_grad(f, arr, step=1e-5):
    g = np.zeros_like(arr)
    it = np.nditer(arr, flags=["multi_index"])
    while not it.finished:
        idx = it.multi_index
        old = arr[idx]
        arr[idx] = old + step
        up = f()
        arr[idx] = old - step
        down = f()
        arr[idx] = old
        g[idx] = (up - down) / (2.0 * step)
        it.iternext()
    return g


def rel_err(a, b):
    denom = max(np.linalg.norm(a), np.linalg.norm(b), 1e-12)
    return np.linalg.norm(a - b) / denom


@pytest.mark.parametrize("out_tanh", [False, True])
def test_param_gradients_match_finite_differences(out_tanh):
    rng = np.random.default_rng(0)
    for trial in range(10):
        sizes = [int(rng.integers(2, 5)) for _ in range(4)]
        params = mlp_init(sizes, rng, out_tanh=out_tanh)
        x = rng.normal(size=(3, sizes[0]))
        target = rng.normal(size=(3, sizes[-1]))

        def loss():
            y, _ = mlp_forward(params, x)
            return 0.5 * float(np.sum((y - target) ** 2))

        y, cache = mlp_forward(params, x)
        grads, _ = mlp_backward(params, cache, y - target)
        for analytic, arr in zip(grads.arrays(), params.arrays()):
            numeric = numeric_grad(loss, arr)
            assert rel_err(analytic, numeric) < 1e-6


def test_input_gradient_matches_finite_differences():
    rng = np.random.default_rng(1)
    sizes = [4, 6, 3]
    params = mlp_init(sizes, rng)
    x = rng.normal(size=(2, 4))
    w = rng.normal(size=(2, 3))  # fixed linear readout to scalar

    def loss():
        y, _ = mlp_forward(params, x)
        return float(np.sum(w * y))

    y, cache = mlp_forward(params, x)
    _, gx = mlp_backward(params, cache, w)
    numeric = numeric_grad(loss, x)
    assert rel_err(gx, numeric) < 1e-6


def test_forward_shapes_and_1d_input():
    rng = np.random.default_rng(2)
    params = mlp_init([5, 8, 2], rng, out_tanh=True)
    y, _ = mlp_forward(params, np.zeros(5))
    assert y.shape == (1, 2)
    assert np.all(np.abs(y) <= 1.0)
    y, _ = mlp_forward(params, np.zeros((7, 5)))
    assert y.shape == (7, 2)


def test_adam_reduces_quadratic_loss():
    rng = np.random.default_rng(3)
    params = mlp_init([3, 16, 1], rng)
    opt = Adam(lr=1e-2)
    x = rng.normal(size=(64, 3))
    target = np.sin(x.sum(axis=1, keepdims=True))

    def loss_and_grads():
        y, cache = mlp_forward(params, x)
        diff = y - target
        grads, _ = mlp_backward(params, cache, diff / len(x))
        return float(np.mean(diff**2)), grads

    first, _ = loss_and_grads()
    for _ in range(300):
        _, grads = loss_and_grads()
        opt.step(params.arrays(), grads.arrays())
    last, _ = loss_and_grads()
    assert last < first * 0.1


def test_polyak_exact_arithmetic():
    rng = np.random.default_rng(4)
    online = [rng.normal(size=(3, 4)), rng.normal(size=4)]
    target = [rng.normal(size=(3, 4)), rng.normal(size=4)]
    want = [5e-3 * o + 0.995 * t for o, t in zip(online, target)]
    polyak_update(target, online, tau=5e-3)
    for got, w in zip(target, want):
        assert np.max(np.abs(got - w)) < 1e-12


def test_polyak_tau_one_copies_exactly():
    rng = np.random.default_rng(5)
    online = [rng.normal(size=(2, 2))]
    target = [rng.normal(size=(2, 2))]
    polyak_update(target, online, tau=1.0)
    assert np.array_equal(target[0], online[0])


def test_checkpoint_roundtrip(tmp_path):
    rng = np.random.default_rng(6)
    critic = mlp_init([4, 8, 1], rng)
    actor = mlp_init([3, 8, 2], rng, out_tanh=True)
    path = str(tmp_path / "ckpt.npz")
    save_npz(path, {"critic": critic.arrays(), "actor_0": actor.arrays()})
    tree = load_npz(path)
    assert set(tree) == {"critic", "actor_0"}
    for got, want in zip(tree["critic"], critic.arrays()):
        assert np.array_equal(got, want)
    for got, want in zip(tree["actor_0"], actor.arrays()):
        assert np.array_equal(got, want)


def test_checkpoint_preserves_layer_order(tmp_path):
    # more than 10 arrays exercises numeric (not lexicographic) index sorting
    arrays = [np.full((1,), float(k)) for k in range(12)]
    path = str(tmp_path / "wide.npz")
    save_npz(path, {"net": arrays})
    got = load_npz(path)["net"]
    assert [a[0] for a in got] == [float(k) for k in range(12)]
