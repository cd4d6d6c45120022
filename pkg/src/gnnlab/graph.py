"""Random graph synthesis and the row-stochastic convolution operator."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidSize


@dataclass(frozen=True)
class Graph:
    """Self-looped undirected graph: binary symmetric adjacency with unit diagonal."""

    n: int
    adjacency: np.ndarray  # (n, n) of 0/1, symmetric, diag all 1
    degrees: np.ndarray    # (n,) row sums, each >= 1

    def __post_init__(self):
        a = self.adjacency
        if a.shape != (self.n, self.n):
            raise InvalidSize(f"adjacency shape {a.shape} != ({self.n}, {self.n})")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        if not np.all(np.diag(a) == 1):
            raise ValueError("all self-loops must be present")
        if not np.array_equal(self.degrees, a.sum(axis=1)):
            raise ValueError("degrees must equal adjacency row sums")

    @property
    def min_degree(self) -> int:
        return int(self.degrees.min())


@dataclass(frozen=True)
class ConvOperator:
    """Degree-normalized adjacency: matrix[i, j] in {0, 1/degrees[i]}, rows sum to 1."""

    matrix: np.ndarray


def from_adjacency(adjacency: np.ndarray) -> Graph:
    """Wrap an explicit 0/1 adjacency matrix (self-loops required) as a Graph."""
    a = np.asarray(adjacency, dtype=np.int64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InvalidSize(f"adjacency must be square and non-empty, got {a.shape}")
    return Graph(n=a.shape[0], adjacency=a, degrees=a.sum(axis=1))


def er_graph(n: int, p: float, seed: int) -> Graph:
    """Sample a self-looped Erdos-Renyi graph: each off-diagonal pair is an
    edge with probability p, independently; deterministic for a fixed seed."""
    if n < 1:
        raise InvalidSize(f"node count must be >= 1, got {n}")
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"edge probability must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    upper = np.triu(rng.random((n, n)) < p, 1).astype(np.int64)
    a = upper + upper.T
    np.fill_diagonal(a, 1)
    return Graph(n=n, adjacency=a, degrees=a.sum(axis=1))


def conv_operator(g: Graph) -> ConvOperator:
    """Build P with P[i, j] = adjacency[i, j] / degrees[i]."""
    return ConvOperator(g.adjacency.astype(float) / g.degrees[:, None])


def avg_inv_degree(g: Graph, convention: str = "reciprocal") -> float:
    """Average degree statistic d-bar used by the convergence constants.

    The default "reciprocal" convention returns (1/n) * sum_i 1/degrees[i],
    the quantity the node-level norm bound actually produces. The "mean"
    convention ((1/n) * sum_i degrees[i]) is kept selectable for sensitivity
    checks only.
    """
    if convention == "reciprocal":
        return float(np.mean(1.0 / g.degrees))
    if convention == "mean":
        return float(np.mean(g.degrees))
    raise ValueError(f"unknown d-bar convention {convention!r}")


def save_edge_list(g: Graph, path) -> None:
    """Write "n" then one "i j" line per undirected non-self-loop edge (0-indexed)."""
    i_idx, j_idx = np.nonzero(np.triu(g.adjacency, 1))
    with open(path, "w") as fh:
        fh.write(f"{g.n}\n")
        for i, j in zip(i_idx, j_idx):
            fh.write(f"{i} {j}\n")


def load_edge_list(path) -> Graph:
    """Read the edge-list format written by save_edge_list; self-loops are
    reconstructed on load."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    n = int(lines[0])
    if n < 1:
        raise InvalidSize(f"node count must be >= 1, got {n}")
    a = np.zeros((n, n), dtype=np.int64)
    np.fill_diagonal(a, 1)
    for ln in lines[1:]:
        i_s, j_s = ln.split()
        i, j = int(i_s), int(j_s)
        a[i, j] = 1
        a[j, i] = 1
    return Graph(n=n, adjacency=a, degrees=a.sum(axis=1))
