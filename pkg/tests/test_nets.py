"""Dense-network machinery: analytic gradients vs finite differences, Adam."""

from __future__ import annotations

import time

import numpy as np
import pytest

from _oracles import adam_oracle
from prefdrive.nets import MLP, Adam, flat_grads, mlp_sizes, soft_update

GRAD_TOL = 1e-4


def finite_difference_param_grads(net: MLP, x: np.ndarray,
                                  loss_weights: np.ndarray, eps: float = 1e-6):
    """Central differences of loss = sum(output * loss_weights) w.r.t. params."""
    grads = []
    for p in net.parameters():
        g = np.zeros_like(p, dtype=np.float64)
        it = np.nditer(p, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + eps
            hi = float(np.sum(net.forward(x) * loss_weights))
            p[idx] = orig - eps
            lo = float(np.sum(net.forward(x) * loss_weights))
            p[idx] = orig
            g[idx] = (hi - lo) / (2.0 * eps)
            it.iternext()
        grads.append(g)
    return grads


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    denom = max(float(np.max(np.abs(a))), float(np.max(np.abs(b))), 1e-8)
    return float(np.max(np.abs(a - b))) / denom


class TestGradientChecks:
    def test_ten_random_instances_under_a_minute(self):
        """Analytic backward vs central differences on fresh random nets."""
        start = time.monotonic()
        rng = np.random.default_rng(12345)
        for k in range(10):
            output = "tanh" if k % 2 else "identity"
            sizes = [int(rng.integers(3, 7)), int(rng.integers(4, 9)),
                     int(rng.integers(3, 7)), int(rng.integers(1, 4))]
            net = MLP(sizes, output=output, rng=rng, dtype=np.float64)
            # keep preactivations away from the ReLU kink so the numeric
            # derivative is well-defined at every probe
            for w in net.weights:
                w += rng.normal(0.0, 0.3, w.shape)
            for b in net.biases:
                b += rng.normal(0.0, 0.3, b.shape)
            x = rng.normal(0.0, 1.0, (4, sizes[0]))
            lw = rng.normal(0.0, 1.0, (4, sizes[-1]))
            out = net.forward(x, cache=True)
            assert min(float(np.abs(z).min()) for z in net._cache[1][:-1]) > 1e-5
            param_grads, input_grad = net.backward(lw)
            analytic = flat_grads(param_grads)
            numeric = finite_difference_param_grads(net, x, lw)
            for a, n in zip(analytic, numeric):
                assert relative_error(a, n) < GRAD_TOL
            # input gradient against central differences as well
            gin = np.zeros_like(x)
            eps = 1e-6
            for i in range(x.shape[0]):
                for j in range(x.shape[1]):
                    xp = x.copy(); xp[i, j] += eps
                    xm = x.copy(); xm[i, j] -= eps
                    gin[i, j] = (np.sum(net.forward(xp) * lw)
                                 - np.sum(net.forward(xm) * lw)) / (2 * eps)
            assert relative_error(input_grad, gin) < GRAD_TOL
            assert out.shape == (4, sizes[-1])
        assert time.monotonic() - start < 60.0

    def test_backward_requires_cached_forward(self):
        net = MLP([3, 4, 2], rng=np.random.default_rng(0))
        with pytest.raises(RuntimeError):
            net.backward(np.ones((1, 2)))

    def test_gradients_sum_over_batch(self):
        rng = np.random.default_rng(3)
        net = MLP([3, 5, 2], rng=rng, dtype=np.float64)
        xa = rng.normal(size=(1, 3))
        xb = rng.normal(size=(1, 3))
        up = np.ones((1, 2))
        net.forward(xa, cache=True)
        ga = flat_grads(net.backward(up)[0])
        net.forward(xb, cache=True)
        gb = flat_grads(net.backward(up)[0])
        net.forward(np.vstack([xa, xb]), cache=True)
        gboth = flat_grads(net.backward(np.ones((2, 2)))[0])
        for a, b, both in zip(ga, gb, gboth):
            assert np.allclose(a + b, both, atol=1e-10)


class TestMLPBasics:
    def test_shapes_and_dtype(self):
        net = MLP([4, 8, 3], rng=np.random.default_rng(1))
        y = net(np.zeros(4))
        assert y.shape == (1, 3)
        assert y.dtype == np.float32
        y = net(np.zeros((7, 4)))
        assert y.shape == (7, 3)

    def test_tanh_head_bounded(self):
        net = MLP([4, 16, 2], output="tanh", rng=np.random.default_rng(2))
        x = np.random.default_rng(0).normal(0.0, 50.0, (100, 4))
        y = net(x)
        assert np.all(y >= -1.0) and np.all(y <= 1.0)

    def test_rejects_bad_architecture(self):
        with pytest.raises(ValueError):
            MLP([4], rng=np.random.default_rng(0))
        with pytest.raises(ValueError):
            MLP([4, 2], output="sigmoid", rng=np.random.default_rng(0))

    def test_rejects_wrong_input_dim(self):
        net = MLP([4, 8, 3], rng=np.random.default_rng(1))
        with pytest.raises(ValueError):
            net(np.zeros(5))

    def test_final_layer_init_is_small(self):
        net = MLP([10, 32, 32, 2], rng=np.random.default_rng(5))
        assert float(np.max(np.abs(net.weights[-1]))) <= 3e-3
        assert float(np.max(np.abs(net.biases[-1]))) <= 3e-3
        # hidden layers use the fan-in rule and zero biases
        assert float(np.max(np.abs(net.weights[0]))) <= np.sqrt(6.0 / 10)
        assert np.all(net.biases[0] == 0.0)

    def test_init_depends_on_rng(self):
        a = MLP([4, 8, 2], rng=np.random.default_rng(7))
        b = MLP([4, 8, 2], rng=np.random.default_rng(7))
        c = MLP([4, 8, 2], rng=np.random.default_rng(8))
        assert all(np.array_equal(x, y) for x, y in zip(a.parameters(), b.parameters()))
        assert any(not np.array_equal(x, y) for x, y in zip(a.parameters(), c.parameters()))

    def test_clone_is_deep(self):
        net = MLP([4, 8, 2], rng=np.random.default_rng(7))
        twin = net.clone()
        twin.weights[0][0, 0] += 1.0
        assert net.weights[0][0, 0] != twin.weights[0][0, 0]

    def test_set_parameters_validates(self):
        net = MLP([4, 8, 2], rng=np.random.default_rng(7))
        params = net.parameters()
        with pytest.raises(ValueError):
            net.set_parameters(params[:-1])
        bad = [p.copy() for p in params]
        bad[0] = np.zeros((5, 8))
        with pytest.raises(ValueError):
            net.set_parameters(bad)

    def test_mlp_sizes_helper(self):
        assert mlp_sizes(154, 2) == [154, 250, 125, 2]
        assert mlp_sizes(10, 5, hidden=(8,)) == [10, 8, 5]


class TestAdam:
    def test_matches_scalar_recursion(self):
        theta0 = 0.7
        grads = [0.3, -0.2, 0.05, 0.9, -1.4, 0.0, 0.31]
        expected = adam_oracle(theta0, grads, lr=1e-2)
        p = [np.array([theta0], dtype=np.float64)]
        opt = Adam(p, lr=1e-2)
        for g in grads:
            opt.step(p, [np.array([g])])
        assert p[0][0] == pytest.approx(expected, abs=1e-12)

    def test_first_step_size_is_lr(self):
        # with bias correction, |delta| of step 1 is lr for any nonzero grad
        p = [np.array([0.0])]
        opt = Adam(p, lr=3e-4)
        opt.step(p, [np.array([12.3])])
        assert abs(p[0][0]) == pytest.approx(3e-4, rel=1e-6)

    def test_state_roundtrip(self):
        rng = np.random.default_rng(0)
        p1 = [rng.normal(size=(3, 2)), rng.normal(size=3)]
        opt1 = Adam(p1, lr=1e-3)
        g = [rng.normal(size=(3, 2)), rng.normal(size=3)]
        opt1.step(p1, g)
        p2 = [a.copy() for a in p1]
        opt2 = Adam(p2, lr=1e-3)
        opt2.load_state(opt1.state())
        g2 = [rng.normal(size=(3, 2)), rng.normal(size=3)]
        opt1.step(p1, g2)
        opt2.step(p2, g2)
        assert all(np.array_equal(a, b) for a, b in zip(p1, p2))


class TestSoftUpdate:
    def test_convex_blend(self):
        rng = np.random.default_rng(11)
        src = MLP([3, 4, 2], rng=rng, dtype=np.float64)
        tgt = src.clone()
        for p in tgt.parameters():
            p[...] = 0.0
        before = [p.copy() for p in src.parameters()]
        soft_update(tgt, src, tau=0.25)
        for t, s in zip(tgt.parameters(), before):
            assert np.allclose(t, 0.25 * s)
        soft_update(tgt, src, tau=1.0)
        for t, s in zip(tgt.parameters(), before):
            assert np.allclose(t, s)

    def test_tau_zero_is_identity(self):
        rng = np.random.default_rng(12)
        src = MLP([3, 4, 2], rng=rng)
        tgt = MLP([3, 4, 2], rng=rng)
        before = [p.copy() for p in tgt.parameters()]
        soft_update(tgt, src, tau=0.0)
        for t, b in zip(tgt.parameters(), before):
            assert np.array_equal(t, b)
