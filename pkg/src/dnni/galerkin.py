"""Linear-element Galerkin solver for  alpha*u'' + beta*u' + gamma*u = f(x).

The domain [x0, xn] carries n equally spaced nodes (h = (xn-x0)/(n-1)) with
a Dirichlet value u0 at the first node and a Neumann slope c at the last.
Hat functions serve as both basis and weights; the second-order term is
integrated by parts, which moves the Neumann flux (-c*alpha) into the last
right-hand-side entry, and the known Dirichlet value is eliminated into the
first.  The unknowns are the n-1 remaining nodal values, giving a
tridiagonal system solved by the Thomas algorithm.

Element integrals of the hat stencil (phi = rising/falling ramp over one
element of width h):

    stiffness   int phi_j' phi_i'   ->  (-1/h, 2/h, -1/h), last row (−1/h, 1/h)
    advection   int phi_j  phi_i'   ->  (-1/2, 0, 1/2),    last row (−1/2, 1/2)
    mass        int phi_j  phi_i    ->  (h/6, 2h/3, h/6),  last row (h/6, h/3)

Row j of the system is  -alpha*stiffness + beta*advection + gamma*mass.

The load vector needs 2(n-1) weighted source integrals
int (x - x_{i-1}) f(x) and int (x_i - x) f(x) per element; they are filled
either by adaptive quadrature or by limit substitution into two trained
antiderivatives N1 (of f) and N2 (of x*f):

    int_{xi}^{xj} (xj - x) f(x) dx = xj*(N1(xj)-N1(xi)) - (N2(xj)-N2(xi))

which turns the whole load assembly into two batched network evaluations.
"""

from __future__ import annotations

import math
import platform
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np

from . import quadrature
from .expr import Expr, as_array_function, parse
from .train import TrainConfig, train as train_model
from .integral import Antiderivative

__all__ = [
    "GalerkinProblem",
    "TridiagonalSystem",
    "BreakevenInputs",
    "GalerkinSolution",
    "TimingReport",
    "GalerkinError",
    "ZeroPivotError",
    "assemble_matrix",
    "load_quadrature",
    "load_dnni",
    "solve_tridiagonal",
    "solve",
    "breakeven",
    "time_rhs",
    "train_load_antiderivatives",
]

LOAD_TOL = 1e-10


class GalerkinError(ValueError):
    pass


class ZeroPivotError(GalerkinError):
    pass


@dataclass
class GalerkinProblem:
    alpha: float
    beta: float
    gamma: float
    source: Union[Expr, str]
    x0: float
    xn: float
    u0: float = 0.0
    c: float = 0.0
    n: int = 101

    def __post_init__(self):
        if isinstance(self.source, str):
            self.source = parse(self.source)
        if not self.x0 < self.xn:
            raise GalerkinError(f"need x0 < xn, got [{self.x0}, {self.xn}]")
        if self.n < 3:
            raise GalerkinError(f"need at least 3 nodes, got {self.n}")

    @property
    def h(self) -> float:
        return (self.xn - self.x0) / (self.n - 1)

    def nodes(self) -> np.ndarray:
        return np.linspace(self.x0, self.xn, self.n)

    def source_fn(self) -> Callable[[np.ndarray], np.ndarray]:
        return as_array_function(self.source, "x")


@dataclass
class TridiagonalSystem:
    """n-1 unknowns; ``rhs`` holds only the boundary contributions here
    (Dirichlet lift in the first entry, Neumann flux in the last); the load
    vector from the source term is added by :func:`solve`."""

    sub: np.ndarray
    diag: np.ndarray
    sup: np.ndarray
    rhs: np.ndarray


@dataclass
class BreakevenInputs:
    """Cost model constants: T seconds to train one antiderivative, t seconds
    per quadrature element integral, epsilon seconds per limit substitution,
    m distinct antiderivatives required by the basis."""

    T: float
    t: float
    epsilon: float
    m: int = 2

    def __post_init__(self):
        if min(self.T, self.t, self.epsilon) < 0 or self.m < 1:
            raise GalerkinError("cost constants must be non-negative, m >= 1")


def assemble_matrix(p: GalerkinProblem) -> TridiagonalSystem:
    """Tridiagonal operator rows for the n-1 unknown nodes, boundary terms
    folded into the right-hand side."""
    h = p.h
    a, b, g = p.alpha, p.beta, p.gamma
    m = p.n - 1  # unknowns
    sub_val = a / h - b / 2.0 + g * h / 6.0    # column i-1 of an interior row
    diag_val = -2.0 * a / h + 2.0 * g * h / 3.0
    sup_val = a / h + b / 2.0 + g * h / 6.0
    sub = np.full(m - 1, sub_val)
    diag = np.full(m, diag_val)
    sup = np.full(m - 1, sup_val)
    # last node carries half a hat
    diag[-1] = -a / h + b / 2.0 + g * h / 3.0
    rhs = np.zeros(m)
    rhs[0] -= p.u0 * sub_val       # Dirichlet value eliminated from column 0
    rhs[-1] -= p.c * a             # Neumann flux from integrating alpha*u'' by parts
    return TridiagonalSystem(sub, diag, sup, rhs)


def _element_integrals_quadrature(p: GalerkinProblem) -> Tuple[np.ndarray, np.ndarray]:
    """(rise[i], fall[i]) = int over element i of (x-left)*f and (right-x)*f."""
    f = p.source_fn()
    ts = p.nodes()
    rise = np.empty(p.n - 1)
    fall = np.empty(p.n - 1)
    for i in range(p.n - 1):
        left, right = ts[i], ts[i + 1]
        r1 = quadrature.adaptive(lambda xs: (xs - left) * f(xs), left, right, LOAD_TOL)
        r2 = quadrature.adaptive(lambda xs: (right - xs) * f(xs), left, right, LOAD_TOL)
        if r1.flag or r2.flag:
            raise GalerkinError(f"element quadrature did not converge on [{left}, {right}]")
        rise[i], fall[i] = r1.value, r2.value
    return rise, fall


def _as_curve(n_obj) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(n_obj, Antiderivative):
        return lambda xs: n_obj.value_array(xs)
    if callable(n_obj):
        return lambda xs: np.array([float(n_obj(x)) for x in xs])
    raise GalerkinError("expected an Antiderivative or a callable antiderivative curve")


def _element_integrals_dnni(p: GalerkinProblem, n1, n2) -> Tuple[np.ndarray, np.ndarray]:
    for n_obj in (n1, n2):
        if isinstance(n_obj, Antiderivative):
            lo, hi = n_obj.domain[0]
            if lo > p.x0 + 1e-12 or hi < p.xn - 1e-12:
                raise GalerkinError(
                    f"antiderivative domain [{lo}, {hi}] narrower than [{p.x0}, {p.xn}]")
    ts = p.nodes()
    v1 = np.asarray(_as_curve(n1)(ts), dtype=np.float64)
    v2 = np.asarray(_as_curve(n2)(ts), dtype=np.float64)
    d1 = np.diff(v1)  # int f over each element
    d2 = np.diff(v2)  # int x*f over each element
    rise = d2 - ts[:-1] * d1
    fall = ts[1:] * d1 - d2
    return rise, fall


def _assemble_load(p: GalerkinProblem, rise: np.ndarray, fall: np.ndarray) -> np.ndarray:
    load = np.empty(p.n - 1)
    load[:-1] = (rise[:-1] + fall[1:]) / p.h
    load[-1] = rise[-1] / p.h
    return load


def load_quadrature(p: GalerkinProblem) -> np.ndarray:
    """Load vector with every element integral done by adaptive quadrature."""
    return _assemble_load(p, *_element_integrals_quadrature(p))


def load_dnni(p: GalerkinProblem, n1, n2) -> np.ndarray:
    """Load vector via limit substitution into antiderivatives of f and x*f."""
    return _assemble_load(p, *_element_integrals_dnni(p, n1, n2))


def solve_tridiagonal(sys: TridiagonalSystem, rhs: Optional[np.ndarray] = None) -> np.ndarray:
    """Thomas algorithm, no pivoting; raises :class:`ZeroPivotError` rather
    than permuting rows."""
    b = np.array(sys.rhs if rhs is None else rhs, dtype=np.float64)
    n = sys.diag.size
    if sys.sub.size != n - 1 or sys.sup.size != n - 1 or b.size != n:
        raise GalerkinError("inconsistent tridiagonal system")
    sup = np.empty(n - 1)
    diag = sys.diag.copy()
    if diag[0] == 0.0:
        raise ZeroPivotError("zero pivot at row 0")
    sup_in, sub_in = sys.sup, sys.sub
    sup[0] = sup_in[0] / diag[0]
    b[0] = b[0] / diag[0]
    for i in range(1, n):
        piv = diag[i] - sub_in[i - 1] * sup[i - 1]
        if piv == 0.0:
            raise ZeroPivotError(f"zero pivot at row {i}")
        if i < n - 1:
            sup[i] = sup_in[i] / piv
        b[i] = (b[i] - sub_in[i - 1] * b[i - 1]) / piv
    for i in range(n - 2, -1, -1):
        b[i] -= sup[i] * b[i + 1]
    return b


def _solve_system(sys: TridiagonalSystem, rhs: np.ndarray) -> Tuple[np.ndarray, str]:
    try:
        return solve_tridiagonal(sys, rhs), "thomas"
    except ZeroPivotError:
        # Pure advection (alpha = gamma = 0) zeroes the interior diagonal;
        # fall back to a dense solve with pivoting for such systems.
        n = sys.diag.size
        dense = np.diag(sys.diag)
        dense[np.arange(1, n), np.arange(n - 1)] = sys.sub
        dense[np.arange(n - 1), np.arange(1, n)] = sys.sup
        return np.linalg.solve(dense, rhs), "dense"


@dataclass
class GalerkinSolution:
    problem: GalerkinProblem
    nodes: np.ndarray
    nodal_values: np.ndarray  # length n, Dirichlet node included
    strategy: str
    solver: str

    def __call__(self, x) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=np.float64), self.nodes, self.nodal_values)


def solve(p: GalerkinProblem, strategy: str = "quadrature",
          n1=None, n2=None) -> GalerkinSolution:
    """Assemble and solve; ``strategy`` picks how the load vector is filled."""
    sys = assemble_matrix(p)
    if strategy == "quadrature":
        load = load_quadrature(p)
    elif strategy == "dnni":
        if n1 is None or n2 is None:
            raise GalerkinError("dnni strategy needs antiderivatives n1 (f) and n2 (x*f)")
        load = load_dnni(p, n1, n2)
    else:
        raise GalerkinError(f"unknown strategy {strategy!r}")
    coeffs, solver = _solve_system(sys, sys.rhs + load)
    nodal = np.concatenate(([p.u0], coeffs))
    return GalerkinSolution(p, p.nodes(), nodal, strategy, solver)


def breakeven(b: BreakevenInputs) -> Tuple[float, int]:
    """Node count beyond which precomputing antiderivatives beats per-element
    quadrature: n_real = 1 + m*T / (2*(t - m*epsilon)); n_int is the smallest
    integer strictly greater."""
    denom = b.t - b.m * b.epsilon
    if denom <= 0.0:
        raise GalerkinError(
            "no finite break-even: substitution is not cheaper than quadrature")
    n_real = 1.0 + (b.m * b.T) / (2.0 * denom)
    return n_real, math.floor(n_real) + 1


def train_load_antiderivatives(
        p: GalerkinProblem, cfg: Optional[TrainConfig] = None) -> Tuple[Antiderivative, Antiderivative, float]:
    """Train N1 on f and N2 on x*f over the problem domain; returns both plus
    the combined wall-clock training time."""
    from .expr import BinOp, Var, to_source  # local to avoid import cycles in docs

    if cfg is None:
        cfg = TrainConfig(domain={"x": (p.x0, p.xn)}, layer_sizes=[1, 16, 16, 1],
                          points_per_axis=200, epochs=15_000, seed=42)
    started = time.perf_counter()
    ads = []
    for index, f_expr in enumerate((p.source, BinOp("*", Var("x"), p.source))):
        run_cfg = cfg if index == 0 else TrainConfig(**{**cfg.__dict__, "seed": cfg.seed + 1})
        network, report = train_model(f_expr, run_cfg)
        ads.append(Antiderivative(
            network, run_cfg.variables(), p.x0,
            [run_cfg.domain[v] for v in run_cfg.variables()],
            to_source(f_expr),
            metadata={"seed": run_cfg.seed, "epochs": run_cfg.epochs,
                      "final_loss": report.final_loss}))
    return ads[0], ads[1], time.perf_counter() - started


@dataclass
class TimingReport:
    strategy: str
    n: int
    repetitions: int
    median_seconds: float
    per_integral_seconds: float
    integrals: int
    training_seconds: Optional[float] = None
    machine: Dict[str, str] = field(default_factory=dict)


def time_rhs(p: GalerkinProblem, strategy: str, repetitions: int = 3,
             n1=None, n2=None, train_cfg: Optional[TrainConfig] = None,
             clock: Callable[[], float] = time.perf_counter) -> TimingReport:
    """Median wall-clock time to fill the load vector.

    For the dnni strategy, training time (the one-off T) is reported
    separately from the per-repetition substitution time (the epsilon side);
    pass ``n1``/``n2`` to reuse already trained models.
    """
    if repetitions < 3:
        raise GalerkinError("need at least 3 repetitions for a stable median")
    training_seconds = None
    if strategy == "dnni" and (n1 is None or n2 is None):
        n1, n2, training_seconds = train_load_antiderivatives(p, train_cfg)
    times = []
    for _ in range(repetitions):
        start = clock()
        if strategy == "quadrature":
            load_quadrature(p)
        elif strategy == "dnni":
            load_dnni(p, n1, n2)
        else:
            raise GalerkinError(f"unknown strategy {strategy!r}")
        times.append(clock() - start)
    times.sort()
    median = times[repetitions // 2] if repetitions % 2 else 0.5 * (
        times[repetitions // 2 - 1] + times[repetitions // 2])
    integrals = 2 * (p.n - 1)
    return TimingReport(
        strategy, p.n, repetitions, median, median / integrals, integrals,
        training_seconds,
        {"platform": platform.platform(), "python": platform.python_version(),
         "processor": platform.processor() or "unknown"},
    )
