"""Small dense feed-forward networks with hand-derived derivative passes.

A network maps an input vector to one scalar through hidden layers of tanh
or sigmoid units and a linear output layer.  Three passes are provided:

* :func:`forward` evaluates the scalar output.
* :func:`input_partial` evaluates the analytic partial derivative of the
  output with respect to one input coordinate by propagating a tangent
  vector alongside the activations.
* :func:`backward_value` / :func:`backward_partial` accumulate exact
  parameter gradients of (upstream * output) and of
  (upstream * input-partial) by reversing the forward / tangent chains.
  The partial reverse pass needs second derivatives of the activation.

Every pass exists in a batched form (rows of inputs) used by the trainer;
the single-point API wraps one-row batches.  Networks are tiny, so an
explicit derivation beats a generic autodiff here and is easy to check
against finite differences.

ReLU is deliberately absent: its second derivative vanishes, which kills
the gradient of the derivative-matching loss.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Dict, List, Sequence, Tuple

import numpy as np

__all__ = [
    "Network",
    "Tape",
    "Gradient",
    "NetError",
    "StaleTapeError",
    "init",
    "forward",
    "input_partial",
    "backward_value",
    "backward_partial",
    "gradient_axpy",
    "forward_batch",
    "partial_batch",
    "backward_value_batch",
    "backward_partial_batch",
]


class NetError(ValueError):
    pass


class StaleTapeError(NetError):
    """The network's parameters changed after this tape was recorded."""


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _tanh_d1(a: np.ndarray) -> np.ndarray:
    out = np.multiply(a, a)
    np.subtract(1.0, out, out=out)
    return out


def _sigmoid_d1(a: np.ndarray) -> np.ndarray:
    out = np.subtract(1.0, a)
    out *= a
    return out


# activation -> (value a = act(z), first derivative from a, and the factor r(a)
# with act'' = act' * r(a):  tanh -> -2a,  sigmoid -> 1 - 2a)
_ACTIVATIONS: Dict[str, Tuple[Callable, Callable, Callable]] = {
    "tanh": (np.tanh, _tanh_d1, lambda a: -2.0 * a),
    "sigmoid": (_sigmoid, _sigmoid_d1, lambda a: 1.0 - 2.0 * a),
}


@dataclass
class Network:
    """Weights ``W[l]`` are (fan_out, fan_in) matrices; biases are vectors.

    ``version`` counts parameter mutations (optimizer steps); tapes recorded
    against an older version are rejected by the backward passes.
    """

    layer_sizes: List[int]
    activation: str
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    version: int = 0

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    def parameter_count(self) -> int:
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def copy_parameters(self) -> Tuple[List[np.ndarray], List[np.ndarray]]:
        return [w.copy() for w in self.weights], [b.copy() for b in self.biases]

    def set_parameters(self, weights: Sequence[np.ndarray], biases: Sequence[np.ndarray]) -> None:
        for dst, src in zip(self.weights, weights):
            dst[...] = src
        for dst, src in zip(self.biases, biases):
            dst[...] = src
        self.version += 1


@dataclass
class Tape:
    """Cached intermediates of one batched forward (and optionally tangent) pass.

    ``acts[0]`` is the input batch; ``acts[l]`` the post-activation of hidden
    layer ``l``.  ``tangents`` mirrors ``acts`` with d(act)/d(input[axis]);
    ``pre_tangents[l]`` is that tangent before the activation was applied and
    ``d1[l]`` the activation derivative at layer ``l``.  Tangent fields are
    ``None`` for a value-only tape.
    """

    version: int
    acts: List[np.ndarray]
    axis: int | None = None
    tangents: List[np.ndarray] | None = None
    pre_tangents: List[np.ndarray] | None = None
    d1: List[np.ndarray] | None = None


@dataclass
class Gradient:
    """d(scalar)/d(parameter) for every weight and bias of one network."""

    weights: List[np.ndarray]
    biases: List[np.ndarray]

    @staticmethod
    def zeros_like(net: Network) -> "Gradient":
        return Gradient([np.zeros_like(w) for w in net.weights],
                        [np.zeros_like(b) for b in net.biases])

    def all_finite(self) -> bool:
        return all(np.isfinite(w).all() for w in self.weights) and \
            all(np.isfinite(b).all() for b in self.biases)


def init(layer_sizes: Sequence[int], activation: str = "tanh", seed: int = 0) -> Network:
    """Deterministically initialize a network.

    Weights are uniform in +-sqrt(6 / (fan_in + fan_out)) drawn from
    numpy's PCG64 generator seeded with ``seed``; biases start at zero.
    """
    sizes = [int(s) for s in layer_sizes]
    if len(sizes) < 2:
        raise NetError("need at least an input and an output layer")
    if any(s <= 0 for s in sizes):
        raise NetError(f"zero-width layer in {sizes}")
    if sizes[-1] != 1:
        raise NetError("output dimension must be exactly 1")
    if activation not in _ACTIVATIONS:
        raise NetError(f"unknown activation {activation!r} (tanh or sigmoid)")
    rng = np.random.Generator(np.random.PCG64(seed))
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return Network(sizes, activation, weights, biases)


# --- batched passes ---------------------------------------------------------


def forward_batch(net: Network, X: np.ndarray) -> Tuple[np.ndarray, Tape]:
    """Outputs (shape (N,)) for an (N, n_inputs) batch, plus the tape."""
    X = _check_batch(net, X)
    act = _ACTIVATIONS[net.activation][0]
    acts = [X]
    a = X
    for W, b in zip(net.weights[:-1], net.biases[:-1]):
        a = act(a @ W.T + b)
        acts.append(a)
    y = a @ net.weights[-1].T + net.biases[-1]
    return y[:, 0], Tape(net.version, acts)


def partial_batch(net: Network, X: np.ndarray, axis: int = 0) -> Tuple[np.ndarray, np.ndarray, Tape]:
    """Outputs and analytic d(output)/d(input[axis]) for a batch, plus tape."""
    X = _check_batch(net, X)
    if not 0 <= axis < net.n_inputs:
        raise NetError(f"axis {axis} out of range for {net.n_inputs} inputs")
    act, dact, _ = _ACTIVATIONS[net.activation]
    seed = np.zeros_like(X)
    seed[:, axis] = 1.0
    acts, tangents, pre_tangents, d1s = [X], [seed], [], []
    a, d = X, seed
    for W, b in zip(net.weights[:-1], net.biases[:-1]):
        t = d @ W.T
        z = a @ W.T
        z += b
        a = act(z, out=z) if act is np.tanh else act(z)
        s1 = dact(a)
        d = s1 * t
        acts.append(a)
        tangents.append(d)
        pre_tangents.append(t)
        d1s.append(s1)
    W_out, b_out = net.weights[-1], net.biases[-1]
    y = (a @ W_out.T + b_out)[:, 0]
    p = (d @ W_out.T)[:, 0]
    return y, p, Tape(net.version, acts, axis, tangents, pre_tangents, d1s)


def backward_value_batch(net: Network, tape: Tape, upstream: np.ndarray) -> Gradient:
    """Gradient of sum_i upstream[i] * output_i over all parameters."""
    _check_tape(net, tape, need_tangent=False)
    u = np.asarray(upstream, dtype=np.float64).reshape(-1)
    if u.shape[0] != tape.acts[0].shape[0]:
        raise NetError("upstream length does not match the tape's batch")
    dact = _ACTIVATIONS[net.activation][1]
    gw = [np.empty_like(w) for w in net.weights]
    gb = [np.empty_like(b) for b in net.biases]
    a_last = tape.acts[-1]
    gw[-1][...] = u[None, :] @ a_last
    gb[-1][...] = u.sum()
    a_bar = u[:, None] * net.weights[-1]  # (N, width of last hidden)
    for layer in range(len(net.weights) - 2, -1, -1):
        a = tape.acts[layer + 1]
        s1 = tape.d1[layer] if tape.d1 is not None else dact(a)
        z_bar = a_bar * s1
        gw[layer][...] = z_bar.T @ tape.acts[layer]
        gb[layer][...] = z_bar.sum(axis=0)
        if layer > 0:
            a_bar = z_bar @ net.weights[layer]
    return Gradient(gw, gb)


def backward_partial_batch(net: Network, tape: Tape, upstream: np.ndarray) -> Gradient:
    """Gradient of sum_i upstream[i] * input_partial_i over all parameters.

    Uses act'' = act' * r(a), so with the tape's cached act' the adjoint of a
    pre-activation is  z_bar = act' * (a_bar + (d_bar * t) * r(a)).
    """
    _check_tape(net, tape, need_tangent=True)
    u = np.asarray(upstream, dtype=np.float64).reshape(-1)
    if u.shape[0] != tape.acts[0].shape[0]:
        raise NetError("upstream length does not match the tape's batch")
    d2_factor = _ACTIVATIONS[net.activation][2]
    gw = [np.empty_like(w) for w in net.weights]
    gb = [np.empty_like(b) for b in net.biases]
    d_last = tape.tangents[-1]
    gw[-1][...] = u[None, :] @ d_last
    gb[-1][...] = 0.0  # output bias never reaches the input-partial
    a_bar: np.ndarray | None = None  # zero at the top layer
    d_bar = u[:, None] * net.weights[-1]
    for layer in range(len(net.weights) - 2, -1, -1):
        a = tape.acts[layer + 1]
        t = tape.pre_tangents[layer]
        s1 = tape.d1[layer]
        z_bar = d_bar * t
        z_bar *= d2_factor(a)
        if a_bar is not None:
            z_bar += a_bar
        z_bar *= s1
        t_bar = d_bar * s1
        gw[layer][...] = z_bar.T @ tape.acts[layer]
        gw[layer] += t_bar.T @ tape.tangents[layer]
        gb[layer][...] = z_bar.sum(axis=0)
        if layer > 0:
            a_bar = z_bar @ net.weights[layer]
            d_bar = t_bar @ net.weights[layer]
    return Gradient(gw, gb)


# --- single-point API --------------------------------------------------------


def forward(net: Network, inputs: Sequence[float]) -> Tuple[float, Tape]:
    y, tape = forward_batch(net, _as_row(net, inputs))
    return float(y[0]), tape


def input_partial(net: Network, inputs: Sequence[float], axis: int = 0) -> Tuple[float, Tape]:
    _, p, tape = partial_batch(net, _as_row(net, inputs), axis)
    return float(p[0]), tape


def backward_value(net: Network, tape: Tape, upstream: float = 1.0) -> Gradient:
    return backward_value_batch(net, tape, np.array([upstream]))


def backward_partial(net: Network, tape: Tape, upstream: float = 1.0) -> Gradient:
    return backward_partial_batch(net, tape, np.array([upstream]))


def gradient_axpy(acc: Gradient, scale: float, g: Gradient) -> Gradient:
    """In-place ``acc += scale * g``; returns ``acc``."""
    if len(acc.weights) != len(g.weights):
        raise NetError("gradient layer counts differ")
    for aw, gw in zip(acc.weights, g.weights):
        if aw.shape != gw.shape:
            raise NetError(f"gradient shape mismatch {aw.shape} vs {gw.shape}")
        aw += scale * gw
    for ab, gb in zip(acc.biases, g.biases):
        if ab.shape != gb.shape:
            raise NetError(f"gradient shape mismatch {ab.shape} vs {gb.shape}")
        ab += scale * gb
    return acc


# --- helpers -----------------------------------------------------------------


def _as_row(net: Network, inputs: Sequence[float]) -> np.ndarray:
    arr = np.asarray(inputs, dtype=np.float64).reshape(1, -1)
    return arr


def _check_batch(net: Network, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != net.n_inputs:
        raise NetError(f"expected (N, {net.n_inputs}) inputs, got {X.shape}")
    if not np.isfinite(X).all():
        raise NetError("non-finite network input")
    return X


def _check_tape(net: Network, tape: Tape, need_tangent: bool) -> None:
    if tape.version != net.version:
        raise StaleTapeError("tape predates a parameter update; re-run the forward pass")
    if len(tape.acts) != len(net.weights):
        raise NetError("tape does not match this network's depth")
    for a, W in zip(tape.acts, net.weights):
        if a.shape[1] != W.shape[1]:
            raise NetError("tape width does not match this network")
    if need_tangent and tape.tangents is None:
        raise NetError("tape has no tangent chain; use input_partial/partial_batch")
