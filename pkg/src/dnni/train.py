"""Training sets, the derivative-matching loss, and the Adam loop.

The loss is the mean squared error between the network's analytic input
partial dN/dx and the integrand sampled on a training grid, so a trained
network is (up to a constant) an antiderivative of the integrand.  Training
is full batch: the point counts involved (tens to a few thousands) never
justify minibatching, and a fixed batch keeps runs bit-reproducible.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from . import net as netmod
from .expr import DomainError, Expr, evaluate, free_vars
from .net import Gradient, Network

__all__ = [
    "TrainConfig",
    "TrainingSet",
    "AdamState",
    "TrainReport",
    "TrainError",
    "DivergenceError",
    "build_training_set",
    "loss",
    "loss_gradient",
    "adam_step",
    "schedule_lr",
    "train",
]


class TrainError(ValueError):
    pass


class DivergenceError(TrainError):
    """Loss became NaN/Inf; ``epoch`` is where it happened."""

    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch


@dataclass
class TrainConfig:
    """Sampling grid, architecture, and optimizer schedule for one run.

    ``domain`` maps each input variable to its closed interval, integration
    variable first.  ``points_per_axis`` is one count for every axis or a
    per-axis sequence; a grid takes the Cartesian product (endpoints
    included), flattened row major with the last axis fastest.
    """

    domain: Dict[str, Tuple[float, float]]
    layer_sizes: Sequence[int]
    points_per_axis: int | Sequence[int] = 100
    sampling: str = "uniform_grid"
    activation: str = "tanh"
    epochs: int = 10_000
    lr0: float = 1e-2
    lr_decay_factor: float = 0.5
    lr_stages: int = 5
    seed: int = 42

    def __post_init__(self):
        if not self.domain:
            raise TrainError("empty domain")
        for name, (lo, hi) in self.domain.items():
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise TrainError(f"bad interval for {name!r}: [{lo}, {hi}]")
        counts = self.axis_counts()
        if any(c < 1 for c in counts):
            raise TrainError("points_per_axis must be positive")
        if math.prod(counts) > 10**7:
            raise TrainError("training grid exceeds 10^7 points")
        if self.sampling not in ("uniform_grid", "uniform_random"):
            raise TrainError(f"unknown sampling {self.sampling!r}")
        if self.epochs < 1:
            raise TrainError("epochs must be >= 1")
        if self.lr0 <= 0:
            raise TrainError("lr0 must be positive")
        sizes = list(self.layer_sizes)
        if sizes[0] != len(self.domain) or sizes[-1] != 1:
            raise TrainError(
                f"layer_sizes {sizes} must start at {len(self.domain)} inputs and end at 1")

    def variables(self) -> List[str]:
        return list(self.domain)

    def axis_counts(self) -> List[int]:
        if isinstance(self.points_per_axis, int):
            return [self.points_per_axis] * len(self.domain)
        counts = [int(c) for c in self.points_per_axis]
        if len(counts) != len(self.domain):
            raise TrainError("points_per_axis length does not match the domain")
        return counts

    def total_points(self) -> int:
        return math.prod(self.axis_counts())


@dataclass
class TrainingSet:
    variables: List[str]
    inputs: np.ndarray  # (N, n_vars)
    targets: np.ndarray  # (N,)
    dropped: int = 0


@dataclass
class AdamState:
    m: Gradient
    v: Gradient
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @staticmethod
    def for_network(network: Network) -> "AdamState":
        return AdamState(Gradient.zeros_like(network), Gradient.zeros_like(network))


@dataclass
class TrainReport:
    loss_history: List[float]
    final_loss: float
    seconds: float
    epochs_run: int


def build_training_set(f: Expr, cfg: TrainConfig) -> TrainingSet:
    """Sample inputs over the configured domain and evaluate the integrand.

    A point where evaluation hits a domain error is nudged toward the domain
    center by 1e-9 of each axis range once, then dropped if it still fails.
    """
    variables = cfg.variables()
    missing = [v for v in free_vars(f) if v not in variables]
    if missing:
        raise TrainError(f"integrand uses undeclared variables {missing}")
    intervals = [cfg.domain[v] for v in variables]
    counts = cfg.axis_counts()
    if cfg.sampling == "uniform_grid":
        axes = [np.linspace(lo, hi, c) if c > 1 else np.array([(lo + hi) / 2.0])
                for (lo, hi), c in zip(intervals, counts)]
        mesh = np.meshgrid(*axes, indexing="ij")
        inputs = np.stack([m.reshape(-1) for m in mesh], axis=1)
    else:
        rng = np.random.Generator(np.random.PCG64(cfg.seed))
        total = math.prod(counts)
        u = rng.random((total, len(intervals)))
        lows = np.array([lo for lo, _ in intervals])
        highs = np.array([hi for _, hi in intervals])
        inputs = lows + u * (highs - lows)

    kept_rows: List[np.ndarray] = []
    targets: List[float] = []
    dropped = 0
    for row in inputs:
        value, row = _eval_with_nudge(f, variables, row, intervals)
        if value is None:
            dropped += 1
            continue
        kept_rows.append(row)
        targets.append(value)
    if not kept_rows:
        raise TrainError("every training point failed to evaluate")
    return TrainingSet(variables, np.array(kept_rows), np.array(targets), dropped)


def _eval_with_nudge(f, variables, row, intervals):
    try:
        return evaluate(f, dict(zip(variables, row))), row
    except DomainError:
        pass
    nudged = row.copy()
    for j, (lo, hi) in enumerate(intervals):
        center = 0.5 * (lo + hi)
        step = 1e-9 * (hi - lo)
        if nudged[j] < center:
            nudged[j] += step
        elif nudged[j] > center:
            nudged[j] -= step
    try:
        return evaluate(f, dict(zip(variables, nudged))), nudged
    except DomainError:
        return None, row


def loss(network: Network, ts: TrainingSet) -> float:
    """(1/N) sum of squared (dN/dx - target) over the training set."""
    _check_widths(network, ts)
    _, p, _ = netmod.partial_batch(network, ts.inputs, axis=0)
    r = p - ts.targets
    return float(np.mean(r * r))


def loss_gradient(network: Network, ts: TrainingSet) -> Tuple[float, Gradient]:
    """Loss and its exact parameter gradient in one batched pass."""
    _check_widths(network, ts)
    _, p, tape = netmod.partial_batch(network, ts.inputs, axis=0)
    r = p - ts.targets
    value = float(np.mean(r * r))
    grad = netmod.backward_partial_batch(network, tape, (2.0 / r.size) * r)
    return value, grad


def _check_widths(network: Network, ts: TrainingSet) -> None:
    if ts.inputs.size == 0:
        raise TrainError("empty training set")
    if ts.inputs.shape[1] != network.n_inputs:
        raise TrainError(
            f"network expects {network.n_inputs} inputs, training set has {ts.inputs.shape[1]}")


def adam_step(network: Network, state: AdamState, grad: Gradient, lr: float) -> None:
    """One bias-corrected Adam update; mutates the network in place."""
    if not grad.all_finite():
        raise DivergenceError("non-finite gradient entries; training aborted", state.t)
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    params = list(zip(network.weights + network.biases,
                      state.m.weights + state.m.biases,
                      state.v.weights + state.v.biases,
                      grad.weights + grad.biases))
    for theta, m, v, g in params:
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        theta -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    network.version += 1


def schedule_lr(cfg: TrainConfig, epoch: int) -> float:
    """Stage-wise decay: lr0 * factor^(stage), stages splitting the epochs evenly."""
    if not 0 <= epoch < cfg.epochs:
        raise TrainError(f"epoch {epoch} outside [0, {cfg.epochs})")
    stage_len = math.ceil(cfg.epochs / cfg.lr_stages)
    return cfg.lr0 * cfg.lr_decay_factor ** (epoch // stage_len)


def _fold_input_affine(network: Network, intervals: Sequence[Tuple[float, float]]) -> None:
    """Rescale the first layer so each input effectively spans [-1, 1].

    Equivalent to normalizing the inputs, but folded into the weights so the
    network keeps the plain dense form (and dN/dx stays a derivative with
    respect to the raw coordinate).  Applied once, right after init.
    """
    scale = np.array([2.0 / (hi - lo) for lo, hi in intervals])
    center = np.array([0.5 * (lo + hi) for lo, hi in intervals])
    W0 = network.weights[0]
    W0 *= scale[None, :]
    network.biases[0] -= W0 @ center


def train(f: Expr, cfg: TrainConfig) -> Tuple[Network, TrainReport]:
    """Full-batch Adam on the derivative-matching loss.

    Deterministic for a fixed config (sampling, init, and updates all flow
    from ``cfg.seed``).  Returns the parameters with the lowest recorded
    loss, which is not necessarily the last epoch's.
    """
    started = time.perf_counter()
    ts = build_training_set(f, cfg)
    network = netmod.init(cfg.layer_sizes, cfg.activation, cfg.seed)
    _fold_input_affine(network, [cfg.domain[v] for v in cfg.variables()])
    state = AdamState.for_network(network)

    history: List[float] = []
    best_loss = math.inf
    best_params = network.copy_parameters()
    for epoch in range(cfg.epochs):
        value, grad = loss_gradient(network, ts)
        if not math.isfinite(value):
            raise DivergenceError(f"loss diverged at epoch {epoch}", epoch)
        history.append(value)
        if value < best_loss:
            best_loss = value
            best_params = network.copy_parameters()
        adam_step(network, state, grad, schedule_lr(cfg, epoch))

    final = loss(network, ts)
    if math.isfinite(final) and final < best_loss:
        best_loss = final
        best_params = network.copy_parameters()
    network.set_parameters(*best_params)
    report = TrainReport(history, best_loss, time.perf_counter() - started, len(history))
    return network, report
