"""Forward evaluation of the node-level and graph-level networks."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .activation import ActivationKind, apply
from .errors import InvalidAggregation, ShapeError
from .graph import ConvOperator

_AGG_TOL = 1e-12


@dataclass(frozen=True)
class Params:
    """Transition matrix W (d x d_out) and output layer v (d_out,)."""

    W: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        if self.W.ndim != 2:
            raise ShapeError(f"W must be 2-d, got shape {self.W.shape}")
        if self.v.ndim != 1 or self.v.shape[0] != self.W.shape[1]:
            raise ShapeError(
                f"v shape {self.v.shape} incompatible with W shape {self.W.shape}"
            )

    @property
    def d(self) -> int:
        return self.W.shape[0]

    @property
    def d_out(self) -> int:
        return self.W.shape[1]


@dataclass(frozen=True)
class Aggregation:
    """Fixed nonnegative node weights summing to 1 (never trained)."""

    weights: np.ndarray

    def __post_init__(self):
        w = self.weights
        if w.ndim != 1 or w.shape[0] < 1:
            raise InvalidAggregation(f"weights must be a non-empty vector, got {w.shape}")
        if np.any(w < 0):
            raise InvalidAggregation("aggregation weights must be nonnegative")
        if abs(float(w.sum()) - 1.0) > _AGG_TOL:
            raise InvalidAggregation(
                f"aggregation weights must sum to 1, got {float(w.sum())!r}"
            )


def make_aggregation(mode: str, n: int, *, index: int | None = None,
                     weights=None) -> Aggregation:
    """Build an aggregation vector.

    mode "particular" picks node `index` (one-hot), "uniform" averages all
    nodes, "attention" validates and passes `weights` through.
    """
    if mode == "particular":
        if index is None or not (0 <= index < n):
            raise InvalidAggregation(f"particular index {index} out of range for n={n}")
        w = np.zeros(n)
        w[index] = 1.0
        return Aggregation(w)
    if mode == "uniform":
        return Aggregation(np.full(n, 1.0 / n))
    if mode == "attention":
        if weights is None:
            raise InvalidAggregation("attention mode needs explicit weights")
        w = np.asarray(weights, dtype=float)
        if w.shape != (n,):
            raise InvalidAggregation(f"attention weights shape {w.shape} != ({n},)")
        return Aggregation(w)
    raise InvalidAggregation(f"unknown aggregation mode {mode!r}")


def ngnn_forward(P: ConvOperator, H: np.ndarray, params: Params,
                 kind: ActivationKind) -> np.ndarray:
    """Node-level prediction vector: sigma(P H W) v, one entry per node."""
    n = P.matrix.shape[0]
    if H.shape != (n, params.d):
        raise ShapeError(f"H shape {H.shape} incompatible with n={n}, d={params.d}")
    return apply(kind, P.matrix @ H @ params.W) @ params.v


def ggnn_forward(graphs: Sequence[tuple[ConvOperator, np.ndarray, Aggregation]],
                 params: Params, kind: ActivationKind) -> np.ndarray:
    """Graph-level predictions: entry j is a_j sigma(P_j H_j W) v."""
    out = np.empty(len(graphs))
    for j, (P, H, agg) in enumerate(graphs):
        nj = P.matrix.shape[0]
        if H.shape != (nj, params.d):
            raise ShapeError(
                f"graph {j}: H shape {H.shape} incompatible with n_j={nj}, d={params.d}"
            )
        if agg.weights.shape != (nj,):
            raise ShapeError(
                f"graph {j}: aggregation length {agg.weights.shape[0]} != n_j={nj}"
            )
        out[j] = agg.weights @ apply(kind, P.matrix @ H @ params.W) @ params.v
    return out
