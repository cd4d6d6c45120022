"""Estimation and guarded inversion of the auxiliary preconditioning matrices.

The node-level matrix is E[(PH)^T sigma(PH)] over standard-Gaussian features;
the graph-level one averages the aggregation-sandwiched per-graph analogue.
Estimates come from Monte-Carlo draws with per-draw RNG streams derived from
(seed, draw index) and reduced in index order, so results are identical for
any thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .activation import ActivationKind, apply
from .errors import IllConditioned, NonFiniteInput
from .graph import ConvOperator
from .model import Aggregation

_CHUNK = 32  # draws per batched matmul


@dataclass(frozen=True)
class XiOperator:
    """Estimated auxiliary matrix with conditioning metadata.

    `stderr` holds per-entry Monte-Carlo standard errors (None for the
    single-pass empirical estimate).
    """

    xi: np.ndarray
    cond: float
    source: str                 # "monte_carlo" or "empirical"
    samples: int | None = None
    stderr: np.ndarray | None = None


def _finish(draws: np.ndarray, source: str) -> XiOperator:
    m = draws.shape[0]
    xi = draws.mean(axis=0)
    if not np.all(np.isfinite(xi)):
        raise NonFiniteInput("auxiliary-matrix estimate is not finite")
    stderr = draws.std(axis=0, ddof=1) / np.sqrt(m) if m > 1 else None
    return XiOperator(xi=xi, cond=float(np.linalg.cond(xi)), source=source,
                      samples=m, stderr=stderr)


def estimate_xi_ngnn(P: ConvOperator, d: int, kind: ActivationKind, *,
                     method: str = "monte_carlo", samples: int = 200,
                     seed: int = 0, H: np.ndarray | None = None,
                     threads: int = 1) -> XiOperator:
    """Estimate the node-level auxiliary matrix.

    "monte_carlo" averages (PH)^T sigma(PH) over `samples` fresh Gaussian
    feature draws; "empirical" evaluates it once on the provided training H.
    """
    Pm = P.matrix
    n = Pm.shape[0]
    if method == "empirical":
        if H is None:
            raise ValueError("empirical estimator needs the training features H")
        B = Pm @ H
        xi = B.T @ apply(kind, B)
        if not np.all(np.isfinite(xi)):
            raise NonFiniteInput("auxiliary-matrix estimate is not finite")
        return XiOperator(xi=xi, cond=float(np.linalg.cond(xi)), source="empirical")
    if method != "monte_carlo":
        raise ValueError(f"unknown estimator {method!r}")
    if samples < 1:
        raise ValueError("samples must be >= 1")

    def chunk_values(indices):
        Hs = np.stack(
            [np.random.default_rng([seed, m]).standard_normal((n, d)) for m in indices],
            axis=1,
        )  # (n, k, d)
        k = len(indices)
        B = (Pm @ Hs.reshape(n, k * d)).reshape(n, k, d)
        return np.einsum("nkd,nke->kde", B, apply(kind, B))

    return _finish(_run_chunks(samples, chunk_values, threads), "monte_carlo")


def estimate_xi_ggnn(graphs: Sequence[tuple[ConvOperator, Aggregation]], d: int,
                     kind: ActivationKind, *, method: str = "monte_carlo",
                     samples: int = 200, seed: int = 0,
                     H_list: Sequence[np.ndarray] | None = None,
                     threads: int = 1) -> XiOperator:
    """Estimate the graph-level auxiliary matrix (1/n-averaged over graphs)."""
    n_graphs = len(graphs)
    if method == "empirical":
        if H_list is None:
            raise ValueError("empirical estimator needs the training features")
        xi = np.zeros((d, d))
        for (P, agg), H in zip(graphs, H_list):
            B = P.matrix @ H
            xi += np.outer(B.T @ agg.weights, apply(kind, B).T @ agg.weights)
        xi /= n_graphs
        if not np.all(np.isfinite(xi)):
            raise NonFiniteInput("auxiliary-matrix estimate is not finite")
        return XiOperator(xi=xi, cond=float(np.linalg.cond(xi)), source="empirical")
    if method != "monte_carlo":
        raise ValueError(f"unknown estimator {method!r}")
    if samples < 1:
        raise ValueError("samples must be >= 1")

    # group same-sized graphs so each draw is a batched matmul
    by_size: dict[int, list[int]] = {}
    for j, (P, _) in enumerate(graphs):
        by_size.setdefault(P.matrix.shape[0], []).append(j)
    stacks = []
    for size, idx in by_size.items():
        Ps = np.stack([graphs[j][0].matrix for j in idx])          # (g, s, s)
        ws = np.stack([graphs[j][1].weights for j in idx])         # (g, s)
        stacks.append((idx, Ps, ws, size))

    def chunk_values(indices):
        out = np.zeros((len(indices), d, d))
        for ci, m in enumerate(indices):
            rng = np.random.default_rng([seed, m])
            acc = np.zeros((d, d))
            for idx, Ps, ws, size in stacks:
                Hs = rng.standard_normal((len(idx), size, d))
                B = Ps @ Hs                                        # (g, s, d)
                t = np.einsum("gs,gsd->gd", ws, B)                 # (PH)^T a^T
                u = np.einsum("gs,gsd->gd", ws, apply(kind, B))    # sigma(PH)^T a^T
                acc += np.einsum("gd,ge->de", t, u)
            out[ci] = acc / n_graphs
        return out

    return _finish(_run_chunks(samples, chunk_values, threads), "monte_carlo")


def _run_chunks(samples: int, chunk_values, threads: int) -> np.ndarray:
    chunks = [range(lo, min(lo + _CHUNK, samples)) for lo in range(0, samples, _CHUNK)]
    if threads <= 1 or len(chunks) == 1:
        blocks = [chunk_values(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(chunk_values, chunks))
    return np.concatenate(blocks, axis=0)


def solve_inverse(op: XiOperator, B: np.ndarray,
                  cond_threshold: float = 1e8) -> np.ndarray:
    """Solve xi @ X = B by a linear solve (never an explicit inverse).

    Raises IllConditioned when the estimate's condition number exceeds the
    threshold, signalling that more samples are needed or the activation
    degenerates.
    """
    if not np.isfinite(op.cond) or op.cond > cond_threshold:
        raise IllConditioned(op.cond, cond_threshold)
    return np.linalg.solve(op.xi, B)


def save_xi_csv(op: XiOperator, path) -> None:
    """Dump the d x d values as CSV plus a trailing metadata comment line."""
    with open(path, "w") as fh:
        for row in op.xi:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")
        samples = "" if op.samples is None else f" samples={op.samples}"
        fh.write(f"# source={op.source}{samples} cond={op.cond:.17g}\n")
