import math

import numpy as np
import pytest

from dnni import net
from dnni.net import (
    Gradient,
    NetError,
    StaleTapeError,
    backward_partial,
    backward_value,
    forward,
    gradient_axpy,
    init,
    input_partial,
)


def rel_err(a, b, floor=1e-3):
    return abs(a - b) / max(abs(a), abs(b), floor)


def flatten_params(network):
    for W in network.weights:
        it = np.nditer(W, flags=["multi_index"])
        for _ in it:
            yield W, it.multi_index
    for b in network.biases:
        for i in range(b.size):
            yield b, (i,)


def fd_wrt_param(fn, arr, idx, h=1e-6):
    arr[idx] += h
    hi = fn()
    arr[idx] -= 2 * h
    lo = fn()
    arr[idx] += h
    return (hi - lo) / (2 * h)


class TestInit:
    def test_deterministic(self):
        a = init([1, 10, 10, 1], "tanh", seed=123)
        b = init([1, 10, 10, 1], "tanh", seed=123)
        for wa, wb in zip(a.weights, b.weights):
            np.testing.assert_array_equal(wa, wb)
        for ba, bb in zip(a.biases, b.biases):
            np.testing.assert_array_equal(ba, bb)

    def test_bound(self):
        network = init([1, 10, 10, 1], "tanh", seed=7)
        assert np.abs(network.weights[0]).max() <= math.sqrt(6.0 / 11.0)
        assert np.abs(network.weights[1]).max() <= math.sqrt(6.0 / 20.0)

    def test_biases_zero(self):
        network = init([2, 5, 1], "sigmoid", seed=0)
        for b in network.biases:
            assert (b == 0.0).all()

    @pytest.mark.parametrize("sizes", [[], [3], [1, 0, 1], [1, 5, 2]])
    def test_bad_sizes(self, sizes):
        with pytest.raises(NetError):
            init(sizes, "tanh", 0)

    def test_bad_activation(self):
        with pytest.raises(NetError):
            init([1, 4, 1], "relu", 0)


class TestForward:
    def test_zero_weights_give_output_bias(self):
        network = init([2, 4, 1], "tanh", seed=1)
        for W in network.weights:
            W[...] = 0.0
        network.biases[-1][...] = 3.25
        for point in ([0.0, 0.0], [1.7, -4.0]):
            value, _ = forward(network, point)
            assert value == 3.25

    def test_single_tanh_unit(self):
        network = init([1, 1, 1], "tanh", seed=1)
        network.weights[0][...] = 1.0
        network.weights[1][...] = 1.0
        network.biases[0][...] = 0.0
        network.biases[1][...] = 0.0
        value, _ = forward(network, [0.0])
        assert value == 0.0
        value, _ = forward(network, [0.5])
        assert value == pytest.approx(math.tanh(0.5), abs=0)

    def test_matches_hand_rolled_chain(self):
        network = init([1, 3, 1], "tanh", seed=99)
        x = 0.7
        # independent evaluation of the same algebra
        z1 = network.weights[0] @ np.array([x]) + network.biases[0]
        a1 = np.tanh(z1)
        expected = float((network.weights[1] @ a1 + network.biases[1])[0])
        value, _ = forward(network, [x])
        assert value == pytest.approx(expected, rel=1e-15)

    def test_shape_mismatch(self):
        network = init([2, 3, 1], "tanh", seed=0)
        with pytest.raises(NetError):
            forward(network, [1.0])


class TestInputPartial:
    def test_zero_weights(self):
        network = init([1, 4, 1], "tanh", seed=2)
        for W in network.weights:
            W[...] = 0.0
        p, _ = input_partial(network, [1.3])
        assert p == 0.0

    def test_hand_chain_rule(self):
        # one tanh unit: d/dx of c*tanh(a*x) = c*a*sech^2(a*x)
        network = init([1, 1, 1], "tanh", seed=0)
        a, c = 2.0, 3.0
        network.weights[0][...] = a
        network.weights[1][...] = c
        network.biases[0][...] = 0.0
        p, _ = input_partial(network, [0.0])
        assert p == pytest.approx(6.0, abs=1e-15)  # sech^2(0) = 1

    @pytest.mark.parametrize("activation", ["tanh", "sigmoid"])
    @pytest.mark.parametrize("seed", [0, 5, 17])
    def test_matches_finite_difference(self, activation, seed):
        network = init([2, 4, 4, 1], activation, seed=seed)
        x = np.array([0.31, -0.44])
        h = 1e-5
        for axis in (0, 1):
            p, _ = input_partial(network, x, axis)
            step = np.zeros(2)
            step[axis] = h
            hi, _ = forward(network, x + step)
            lo, _ = forward(network, x - step)
            assert rel_err(p, (hi - lo) / (2 * h)) <= 1e-6

    def test_outer_linearity(self):
        network = init([1, 6, 1], "tanh", seed=3)
        p1, _ = input_partial(network, [0.47])
        network.weights[-1] *= 2.0
        p2, _ = input_partial(network, [0.47])
        assert p2 == pytest.approx(2.0 * p1, rel=1e-15)

    def test_bad_axis(self):
        network = init([2, 3, 1], "tanh", seed=0)
        with pytest.raises(NetError):
            input_partial(network, [0.0, 0.0], axis=2)


class TestBackwardValue:
    def test_zero_upstream(self):
        network = init([1, 5, 1], "tanh", seed=4)
        _, tape = forward(network, [0.2])
        g = backward_value(network, tape, 0.0)
        for arr in g.weights + g.biases:
            assert (arr == 0.0).all()

    def test_constant_net_output_bias(self):
        network = init([1, 4, 1], "tanh", seed=5)
        for W in network.weights:
            W[...] = 0.0
        _, tape = forward(network, [0.9])
        g = backward_value(network, tape, 2.5)
        assert g.biases[-1][0] == 2.5

    @pytest.mark.parametrize("activation", ["tanh", "sigmoid"])
    def test_matches_finite_difference(self, activation):
        network = init([2, 4, 4, 1], activation, seed=11)
        x = np.array([0.15, 0.6])
        _, tape = forward(network, x)
        g = backward_value(network, tape, 1.0)
        flat_g = g.weights + g.biases
        for (arr, idx), g_arr in zip(flatten_params(network), _iter_entries(flat_g)):
            fd = fd_wrt_param(lambda: forward(network, x)[0], arr, idx)
            assert rel_err(g_arr, fd) <= 1e-5


class TestBackwardPartial:
    def test_zero_weight_net_bias_gradient(self):
        network = init([1, 4, 1], "tanh", seed=6)
        for W in network.weights:
            W[...] = 0.0
        _, tape = input_partial(network, [0.3])
        g = backward_partial(network, tape, 1.0)
        assert g.biases[-1][0] == 0.0

    def test_hand_symbolic_outer_weight(self):
        # p = c*a*sech^2(a*x); dp/dc = a*sech^2(a*x) = 2 at a=2, x=0
        network = init([1, 1, 1], "tanh", seed=0)
        network.weights[0][...] = 2.0
        network.weights[1][...] = 3.0
        network.biases[0][...] = 0.0
        _, tape = input_partial(network, [0.0])
        g = backward_partial(network, tape, 1.0)
        assert g.weights[1][0, 0] == pytest.approx(2.0, abs=1e-15)

    @pytest.mark.parametrize("activation", ["tanh", "sigmoid"])
    def test_matches_finite_difference(self, activation):
        network = init([1, 3, 3, 1], activation, seed=21)
        x = np.array([0.52])
        _, tape = input_partial(network, x)
        g = backward_partial(network, tape, 1.0)
        flat_g = g.weights + g.biases
        for (arr, idx), g_arr in zip(flatten_params(network), _iter_entries(flat_g)):
            fd = fd_wrt_param(lambda: input_partial(network, x)[0], arr, idx)
            assert rel_err(g_arr, fd) <= 1e-5

    def test_value_tape_rejected(self):
        network = init([1, 3, 1], "tanh", seed=0)
        _, tape = forward(network, [0.1])
        with pytest.raises(NetError, match="tangent"):
            backward_partial(network, tape, 1.0)

    def test_stale_tape_rejected(self):
        network = init([1, 3, 1], "tanh", seed=0)
        _, tape = input_partial(network, [0.1])
        network.version += 1  # what an optimizer step does
        with pytest.raises(StaleTapeError):
            backward_partial(network, tape, 1.0)


class TestGradientAxpy:
    def _pair(self):
        network = init([1, 3, 1], "tanh", seed=8)
        _, tape = input_partial(network, [0.4])
        g = backward_partial(network, tape, 1.0)
        return Gradient.zeros_like(network), g

    def test_zero_scale_keeps_acc(self):
        acc, g = self._pair()
        before = [w.copy() for w in acc.weights]
        gradient_axpy(acc, 0.0, g)
        for w, prev in zip(acc.weights, before):
            np.testing.assert_array_equal(w, prev)

    def test_copy_from_zero(self):
        acc, g = self._pair()
        gradient_axpy(acc, 1.0, g)
        for a, b in zip(acc.weights, g.weights):
            np.testing.assert_array_equal(a, b)

    def test_self_cancel(self):
        _, g = self._pair()
        gradient_axpy(g, -1.0, g)
        for arr in g.weights + g.biases:
            assert (arr == 0.0).all()

    def test_shape_mismatch(self):
        acc, _ = self._pair()
        other = Gradient.zeros_like(init([1, 4, 1], "tanh", seed=0))
        with pytest.raises(NetError):
            gradient_axpy(acc, 1.0, other)


def _iter_entries(arrays):
    for arr in arrays:
        flat = arr.reshape(-1)
        for v in flat:
            yield float(v)


def test_forward_and_partial_are_pure():
    network = init([1, 6, 6, 1], "tanh", seed=13)
    x = [0.77]
    v1, _ = forward(network, x)
    v2, _ = forward(network, x)
    p1, _ = input_partial(network, x)
    p2, _ = input_partial(network, x)
    assert v1 == v2 and p1 == p2
