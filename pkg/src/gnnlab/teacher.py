"""Teacher sampling and synthetic dataset generation for both task families."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .activation import ActivationKind, parse_kind
from .errors import InvalidNoise, InvalidSize
from .graph import Graph, conv_operator, load_edge_list, save_edge_list
from .model import Aggregation, Params, ggnn_forward, make_aggregation, ngnn_forward


@dataclass(frozen=True)
class NgnnDataset:
    """One graph, Gaussian node features, one label per node."""

    graph: Graph
    H: np.ndarray          # (n, d)
    y: np.ndarray          # (n,)
    noise_var: float
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.graph.n


@dataclass(frozen=True)
class GgnnDataset:
    """Many graphs with per-graph features and aggregations, one label per graph."""

    graphs: list  # of (Graph, H_j, Aggregation)
    y: np.ndarray
    noise_var: float
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.graphs)

    @property
    def n_max(self) -> int:
        return max(g.n for g, _, _ in self.graphs)


def sample_teacher(d: int, d_out: int, seed: int) -> Params:
    """Draw ground-truth parameters: W* a Frobenius-normalized Gaussian matrix
    (so its norm is exactly 1), v* standard Gaussian."""
    if d < 1 or d_out < 1:
        raise InvalidSize(f"dimensions must be >= 1, got d={d}, d_out={d_out}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((d, d_out))
    return Params(W=g / np.linalg.norm(g), v=rng.standard_normal(d_out))


def synth_ngnn(graph: Graph, teacher: Params, kind: ActivationKind,
               noise_var: float, seed: int) -> NgnnDataset:
    """Fresh standard-Gaussian features and labels from the teacher network
    plus centered Gaussian noise of variance noise_var."""
    if noise_var < 0:
        raise InvalidNoise(f"noise variance must be >= 0, got {noise_var}")
    rng = np.random.default_rng(seed)
    H = rng.standard_normal((graph.n, teacher.d))
    y = ngnn_forward(conv_operator(graph), H, teacher, kind)
    if noise_var > 0:
        y = y + np.sqrt(noise_var) * rng.standard_normal(graph.n)
    return NgnnDataset(graph=graph, H=H, y=y, noise_var=noise_var,
                       meta={"seed": seed, "activation": str(kind)})


def synth_ggnn(n_graphs: int, nodes_per_graph: int, p: float, aggregation: str,
               teacher: Params, kind: ActivationKind, noise_var: float,
               seed: int) -> GgnnDataset:
    """Independent self-looped ER graphs with fresh features; labels from the
    teacher network plus Gaussian noise.

    `aggregation` is "uniform" or "particular:<i>"; attention weights are a
    per-graph input and are not synthesized here.
    """
    if noise_var < 0:
        raise InvalidNoise(f"noise variance must be >= 0, got {noise_var}")
    if n_graphs < 1 or nodes_per_graph < 1:
        raise InvalidSize(
            f"need n_graphs >= 1 and nodes_per_graph >= 1, got {n_graphs}, {nodes_per_graph}"
        )
    from .graph import er_graph  # local import keeps module load order simple

    rng = np.random.default_rng(seed)
    graphs = []
    for j in range(n_graphs):
        g = er_graph(nodes_per_graph, p, seed=int(rng.integers(2**63)))
        H = rng.standard_normal((nodes_per_graph, teacher.d))
        graphs.append((g, H, _parse_aggregation(aggregation, nodes_per_graph)))
    trip = [(conv_operator(g), H, a) for g, H, a in graphs]
    y = ggnn_forward(trip, teacher, kind)
    if noise_var > 0:
        y = y + np.sqrt(noise_var) * rng.standard_normal(n_graphs)
    return GgnnDataset(graphs=graphs, y=y, noise_var=noise_var,
                       meta={"seed": seed, "activation": str(kind),
                             "aggregation": aggregation})


def _parse_aggregation(spec: str, n: int) -> Aggregation:
    if spec == "uniform":
        return make_aggregation("uniform", n)
    if spec.startswith("particular:"):
        return make_aggregation("particular", n, index=int(spec.split(":", 1)[1]))
    raise InvalidSize(f"unknown aggregation spec {spec!r}")


# ---------------------------------------------------------------------------
# directory serialization: edge list + CSVs (17 significant digits) + metadata


def _write_csv(path, arr: np.ndarray) -> None:
    arr = np.atleast_2d(arr.T).T  # vectors become one column
    with open(path, "w") as fh:
        for row in arr:
            fh.write(",".join(f"{x:.17g}" for x in np.atleast_1d(row)) + "\n")


def _read_csv(path) -> np.ndarray:
    rows = []
    with open(path) as fh:
        for ln in fh:
            ln = ln.strip()
            if ln:
                rows.append([float(x) for x in ln.split(",")])
    return np.array(rows)


def save_dataset(ds, directory) -> None:
    """Serialize a dataset to a directory: graph edge list(s), features and
    labels as CSV, metadata as key=value text."""
    os.makedirs(directory, exist_ok=True)
    meta = dict(ds.meta)
    meta["noise_var"] = repr(ds.noise_var)
    if isinstance(ds, NgnnDataset):
        meta["mode"] = "ngnn"
        save_edge_list(ds.graph, os.path.join(directory, "graph.edges"))
        _write_csv(os.path.join(directory, "features.csv"), ds.H)
        _write_csv(os.path.join(directory, "labels.csv"), ds.y)
    else:
        meta["mode"] = "ggnn"
        meta["n_graphs"] = str(ds.n)
        for j, (g, H, agg) in enumerate(ds.graphs):
            save_edge_list(g, os.path.join(directory, f"graph_{j:05d}.edges"))
            _write_csv(os.path.join(directory, f"features_{j:05d}.csv"), H)
            _write_csv(os.path.join(directory, f"aggregation_{j:05d}.csv"), agg.weights)
        _write_csv(os.path.join(directory, "labels.csv"), ds.y)
    with open(os.path.join(directory, "metadata.txt"), "w") as fh:
        for k in sorted(meta):
            fh.write(f"{k}={meta[k]}\n")


def load_dataset(directory):
    """Inverse of save_dataset."""
    meta = {}
    with open(os.path.join(directory, "metadata.txt")) as fh:
        for ln in fh:
            k, _, v = ln.strip().partition("=")
            meta[k] = v
    noise_var = float(meta.pop("noise_var"))
    mode = meta.pop("mode")
    y = _read_csv(os.path.join(directory, "labels.csv")).ravel()
    if mode == "ngnn":
        g = load_edge_list(os.path.join(directory, "graph.edges"))
        H = _read_csv(os.path.join(directory, "features.csv"))
        return NgnnDataset(graph=g, H=H, y=y, noise_var=noise_var, meta=meta)
    n_graphs = int(meta.pop("n_graphs"))
    graphs = []
    for j in range(n_graphs):
        g = load_edge_list(os.path.join(directory, f"graph_{j:05d}.edges"))
        H = _read_csv(os.path.join(directory, f"features_{j:05d}.csv"))
        w = _read_csv(os.path.join(directory, f"aggregation_{j:05d}.csv")).ravel()
        graphs.append((g, H, Aggregation(w)))
    return GgnnDataset(graphs=graphs, y=y, noise_var=noise_var, meta=meta)


__all__ = [
    "NgnnDataset", "GgnnDataset", "sample_teacher", "synth_ngnn", "synth_ggnn",
    "save_dataset", "load_dataset",
]
