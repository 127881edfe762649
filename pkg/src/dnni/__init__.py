"""Neural antiderivatives: train a network whose x-derivative matches an
integrand, then read definite integrals and parametric closed forms off the
network by substituting limits.  Includes classical quadrature for truth
checks, a linear-element Galerkin solver whose load vector can be filled by
either route, and a registry of worked case studies.
"""

from . import cases, cli, expr, galerkin, integral, net, quadrature, train
from .expr import Bindings, Expr, evaluate, free_vars, parse
from .integral import Antiderivative
from .net import Network
from .train import TrainConfig, TrainReport

__all__ = [
    "cases",
    "cli",
    "expr",
    "galerkin",
    "integral",
    "net",
    "quadrature",
    "train",
    "Bindings",
    "Expr",
    "evaluate",
    "free_vars",
    "parse",
    "Antiderivative",
    "Network",
    "TrainConfig",
    "TrainReport",
]

__version__ = "0.1.0"
