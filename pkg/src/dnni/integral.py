"""Trained antiderivative objects: evaluation, definite integrals, persistence.

The derivative-matching loss is blind to constants, so a trained network
carries an arbitrary offset.  An :class:`Antiderivative` removes it at
evaluation time by anchoring: ``value(x) = N(x, params) - N(x0, params)``,
which is exactly zero at the anchor.  Definite integrals and parametric
closed forms are differences of network evaluations, never quadrature.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import net as netmod
from .net import Network

__all__ = [
    "Antiderivative",
    "OutOfDomainWarning",
    "MissingParameterError",
    "ModelFileError",
    "save",
    "load",
    "SCHEMA_VERSION",
]

SCHEMA_VERSION = 1


class OutOfDomainWarning(UserWarning):
    """Evaluation outside the training domain: extrapolation, not integration."""


class MissingParameterError(KeyError):
    pass


class ModelFileError(ValueError):
    pass


@dataclass
class Antiderivative:
    """A trained network plus the conventions needed to read it as an integral.

    ``variables`` lists the network inputs, integration variable first.
    ``domain`` holds one closed interval per variable (the training box).
    ``zeta`` records the finite stand-in used for an infinite upper limit,
    when the underlying integral has one.
    """

    net: Network
    variables: List[str]
    anchor: float
    domain: List[Tuple[float, float]]
    integrand: str = ""
    zeta: Optional[float] = None
    metadata: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.net.n_inputs != len(self.variables):
            raise ValueError("network width does not match the variable list")
        if len(self.domain) != len(self.variables):
            raise ValueError("need one domain interval per variable")
        lo, hi = self.domain[0]
        if not lo <= self.anchor <= hi:
            raise ValueError(f"anchor {self.anchor} outside training domain [{lo}, {hi}]")

    # -- evaluation ---------------------------------------------------------

    def value(self, x: float, params: Optional[Dict[str, float]] = None) -> float:
        """Anchored antiderivative N(x, params) - N(anchor, params)."""
        row = self._row(x, params)
        self._domain_check([row])
        anchor_row = row.copy()
        anchor_row[0] = self.anchor
        y, _ = netmod.forward_batch(self.net, np.stack([row, anchor_row]))
        return float(y[0] - y[1])

    def definite(self, lower: float, upper: float,
                 params: Optional[Dict[str, float]] = None) -> float:
        """N(upper, params) - N(lower, params)."""
        row_lo = self._row(lower, params)
        row_hi = self._row(upper, params)
        self._domain_check([row_lo, row_hi])
        y, _ = netmod.forward_batch(self.net, np.stack([row_hi, row_lo]))
        return float(y[0] - y[1])

    def closed_form(self, lower: float, upper: float) -> Callable[..., float]:
        """Freeze the limits; return F(**params) = N(upper, .) - N(lower, .)."""

        def F(**params: float) -> float:
            return self.definite(lower, upper, params)

        return F

    def value_array(self, xs: Sequence[float],
                    params: Optional[Dict[str, float]] = None) -> np.ndarray:
        """Vectorized :meth:`value` over many x with shared parameters."""
        xs = np.asarray(xs, dtype=np.float64).reshape(-1)
        template = self._row(xs[0] if xs.size else self.anchor, params)
        X = np.tile(template, (xs.size + 1, 1))
        X[:-1, 0] = xs
        X[-1, 0] = self.anchor
        self._domain_check([X.min(axis=0), X.max(axis=0)])
        y, _ = netmod.forward_batch(self.net, X)
        return y[:-1] - y[-1]

    def derivative_array(self, xs: Sequence[float],
                         params: Optional[Dict[str, float]] = None) -> np.ndarray:
        """dN/dx on a grid; what the loss trained toward the integrand."""
        xs = np.asarray(xs, dtype=np.float64).reshape(-1)
        template = self._row(xs[0] if xs.size else self.anchor, params)
        X = np.tile(template, (xs.size, 1))
        X[:, 0] = xs
        _, p, _ = netmod.partial_batch(self.net, X, axis=0)
        return p

    # -- helpers --------------------------------------------------------------

    def _row(self, x: float, params: Optional[Dict[str, float]]) -> np.ndarray:
        params = params or {}
        row = np.empty(len(self.variables))
        row[0] = x
        for j, name in enumerate(self.variables[1:], start=1):
            if name not in params:
                raise MissingParameterError(name)
            row[j] = params[name]
        return row

    def _domain_check(self, rows: Sequence[np.ndarray]) -> None:
        for row in rows:
            for v, (lo, hi), name in zip(row, self.domain, self.variables):
                slack = 1e-12 * (hi - lo)
                if v < lo - slack or v > hi + slack:
                    warnings.warn(
                        f"{name}={v!r} outside training domain [{lo}, {hi}]; "
                        "the result is an extrapolation",
                        OutOfDomainWarning,
                        stacklevel=3,
                    )


# -- persistence --------------------------------------------------------------


def save(ad: Antiderivative, path: str) -> None:
    """Write a model file; binary64 values survive the round trip exactly."""
    doc = {
        "schema_version": SCHEMA_VERSION,
        "activation": ad.net.activation,
        "layer_sizes": list(ad.net.layer_sizes),
        "weights": [w.tolist() for w in ad.net.weights],
        "biases": [b.tolist() for b in ad.net.biases],
        "variables": list(ad.variables),
        "anchor": ad.anchor,
        "domain": [[lo, hi] for lo, hi in ad.domain],
        "integrand": ad.integrand,
        "zeta": ad.zeta,
        "metadata": ad.metadata,
    }
    with open(path, "w", encoding="ascii") as handle:
        json.dump(doc, handle, indent=1)
        handle.write("\n")


def load(path: str) -> Antiderivative:
    """Read a model file written by :func:`save`; validates schema and shapes."""
    with open(path, "r", encoding="ascii") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ModelFileError(f"not a model file: {exc}") from None
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ModelFileError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    try:
        sizes = [int(s) for s in doc["layer_sizes"]]
        weights = [np.array(w, dtype=np.float64) for w in doc["weights"]]
        biases = [np.array(b, dtype=np.float64) for b in doc["biases"]]
        variables = [str(v) for v in doc["variables"]]
        anchor = float(doc["anchor"])
        domain = [(float(lo), float(hi)) for lo, hi in doc["domain"]]
        activation = str(doc["activation"])
        integrand = str(doc.get("integrand", ""))
        zeta = doc.get("zeta")
        metadata = dict(doc.get("metadata", {}))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"malformed model file: {exc}") from None
    expected = list(zip(sizes[1:], sizes[:-1]))
    if [w.shape for w in weights] != expected:
        raise ModelFileError(
            f"weight shapes {[w.shape for w in weights]} do not match layer_sizes {sizes}")
    if [b.shape for b in biases] != [(s,) for s in sizes[1:]]:
        raise ModelFileError("bias shapes do not match layer_sizes")
    network = Network(sizes, activation, weights, biases)
    return Antiderivative(network, variables, anchor, domain, integrand,
                          None if zeta is None else float(zeta), metadata)
