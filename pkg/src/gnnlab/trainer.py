"""Preconditioned approximate gradient descent with W-renormalization.

Per step: the W-gradient replaces the activation-derivative factor with the
inverse of a precomputed auxiliary matrix, W is renormalized onto the unit
Frobenius sphere, and v takes the exact gradient of the half-mean-squared
objective. The auxiliary matrix depends only on the graph(s) and activation,
so it is estimated once before the loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .activation import ActivationKind, apply
from .errors import DegenerateUpdate, Diverged, IllConditioned
from .graph import avg_inv_degree, conv_operator
from .model import Params
from .teacher import GgnnDataset, NgnnDataset
from .theory import check_confinement, constants
from .xi import XiOperator, estimate_xi_ggnn, estimate_xi_ngnn, solve_inverse

PROBE_EPOCHS = 50        # sign-search probe length (capped at the epoch budget)
DIVERGENCE_GUARD = 1e12  # reported-loss ceiling before aborting
DEGENERATE_TOL = 1e-14   # smallest allowed pre-normalization W norm


@dataclass(frozen=True)
class TrainConfig:
    mode: str                    # "ngnn" or "ggnn"
    alpha: float
    epochs: int
    kind: ActivationKind
    d_out: int = 1
    xi_method: str = "monte_carlo"
    xi_samples: int = 200
    seed: int = 0
    init_mode: str = "oracle_signs"   # or "random_signsearch"
    cond_threshold: float = 1e8

    def __post_init__(self):
        if self.mode not in ("ngnn", "ggnn"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.init_mode not in ("oracle_signs", "random_signsearch"):
            raise ValueError(f"unknown init mode {self.init_mode!r}")


@dataclass
class TrajectoryRecord:
    """Per-epoch rows t = 0..T; teacher-dependent columns are None when the
    teacher is unknown."""

    epoch: list[int] = field(default_factory=list)
    dist_w: list[float | None] = field(default_factory=list)
    dist_v: list[float | None] = field(default_factory=list)
    loss: list[float] = field(default_factory=list)
    confined_w: list[bool | None] = field(default_factory=list)
    confined_v: list[bool | None] = field(default_factory=list)
    max_w_norm_err: float = 0.0  # running max of | ||W_t||_F - 1 |, not a CSV column

    def append(self, t, dw, dv, ls, cw, cv):
        self.epoch.append(t)
        self.dist_w.append(dw)
        self.dist_v.append(dv)
        self.loss.append(ls)
        self.confined_w.append(cw)
        self.confined_v.append(cv)

    def __len__(self):
        return len(self.epoch)


@dataclass(frozen=True)
class TrainResult:
    params: Params
    trajectory: TrajectoryRecord
    xi: XiOperator


# ---------------------------------------------------------------------------
# prepared views of the two dataset families

class _NgnnWork:
    def __init__(self, ds: NgnnDataset):
        self.n = ds.n
        self.y = ds.y
        self.PH = conv_operator(ds.graph).matrix @ ds.H  # fixed across epochs
        self.dbar = avg_inv_degree(ds.graph)
        self.n_max = None

    def residual(self, params: Params, kind: ActivationKind):
        C = apply(kind, self.PH @ params.W)
        return self.y - C @ params.v, C

    def grad_terms(self, params: Params, kind: ActivationKind):
        resid, C = self.residual(params, kind)
        gw_raw = np.outer(self.PH.T @ resid, params.v)   # (PH)^T (y - yhat) v^T
        gv = -(1.0 / self.n) * (C.T @ resid)
        return resid, gw_raw, gv


class _GgnnWork:
    def __init__(self, ds: GgnnDataset):
        self.n = ds.n
        self.y = ds.y
        self.n_max = ds.n_max
        self.dbar = None
        # group by graph size so each epoch is a few batched contractions
        by_size: dict[int, list[int]] = {}
        for j, (g, _, _) in enumerate(ds.graphs):
            by_size.setdefault(g.n, []).append(j)
        self.groups = []
        for size, idx in by_size.items():
            PHs = np.stack([conv_operator(ds.graphs[j][0]).matrix @ ds.graphs[j][1]
                            for j in idx])                       # (g, s, d)
            ws = np.stack([ds.graphs[j][2].weights for j in idx])  # (g, s)
            t = np.einsum("gs,gsd->gd", ws, PHs)                 # (PH)^T a^T per graph
            self.groups.append((np.array(idx), PHs, ws, t))

    def residual(self, params: Params, kind: ActivationKind):
        yhat = np.empty(self.n)
        embeds = []
        for idx, PHs, ws, _ in self.groups:
            C = apply(kind, PHs @ params.W)                      # (g, s, d_out)
            b = np.einsum("gs,gsd->gd", ws, C)                   # (g, d_out)
            yhat[idx] = b @ params.v
            embeds.append(b)
        return self.y - yhat, embeds

    def grad_terms(self, params: Params, kind: ActivationKind):
        resid, embeds = self.residual(params, kind)
        d = params.d
        S = np.zeros(d)
        gv = np.zeros(params.d_out)
        for (idx, _, _, t), b in zip(self.groups, embeds):
            r = resid[idx]
            S += t.T @ r
            gv += b.T @ r
        return resid, np.outer(S, params.v), -(1.0 / self.n) * gv


def _prepare(data):
    if isinstance(data, NgnnDataset):
        return _NgnnWork(data)
    if isinstance(data, GgnnDataset):
        return _GgnnWork(data)
    raise TypeError(f"unsupported dataset type {type(data).__name__}")


# ---------------------------------------------------------------------------
# public gradient/step operations

def grad_w(data, params: Params, kind: ActivationKind, xi: XiOperator,
           cond_threshold: float = 1e8) -> np.ndarray:
    """Preconditioned W-gradient: -(1/n) xi^{-1} applied to the convolved-
    feature/residual stack, times v^T."""
    work = _prepare(data)
    _, gw_raw, _ = work.grad_terms(params, kind)
    return -(1.0 / work.n) * solve_inverse(xi, gw_raw, cond_threshold)


def grad_v(data, params: Params, kind: ActivationKind) -> np.ndarray:
    """Exact gradient of (1/2n)||y - yhat||^2 with respect to v at fixed W."""
    work = _prepare(data)
    _, _, gv = work.grad_terms(params, kind)
    return gv


def step(params: Params, gw: np.ndarray, gv: np.ndarray, alpha: float) -> Params:
    """One update: W renormalized to unit Frobenius norm, v additive."""
    U = params.W - alpha * gw
    norm = float(np.linalg.norm(U))
    if norm <= DEGENERATE_TOL:
        raise DegenerateUpdate(norm)
    return Params(W=U / norm, v=params.v - alpha * gv)


def draw_init(d: int, d_out: int, seed: int) -> Params:
    """Base initialization draw: Frobenius-normalized Gaussian W, Gaussian v."""
    rng = np.random.default_rng([seed, 2])
    g = rng.standard_normal((d, d_out))
    return Params(W=g / np.linalg.norm(g), v=rng.standard_normal(d_out))


def init_params(d: int, d_out: int, init_mode: str, seed: int,
                teacher: Params | None = None) -> list[Params]:
    """Initialization candidates.

    "random_signsearch" returns all four sign combinations of one draw for
    the caller to race; "oracle_signs" flips signs against the known teacher
    so that Tr(W*^T W0) >= 0 and v*^T v0 >= 0, returning a single candidate.
    """
    base = draw_init(d, d_out, seed)
    if init_mode == "random_signsearch":
        return [Params(W=sw * base.W, v=sv * base.v)
                for sw in (1.0, -1.0) for sv in (1.0, -1.0)]
    if init_mode == "oracle_signs":
        if teacher is None:
            raise ValueError("oracle_signs initialization needs the teacher")
        sw = -1.0 if float(np.trace(teacher.W.T @ base.W)) < 0 else 1.0
        sv = -1.0 if float(teacher.v @ base.v) < 0 else 1.0
        return [Params(W=sw * base.W, v=sv * base.v)]
    raise ValueError(f"unknown init mode {init_mode!r}")


# ---------------------------------------------------------------------------
# training loop

def _confinement_consts(mode, params0, teacher, d, d_out, l_sigma, alpha,
                        dbar, n_max):
    return constants(mode, d=d, d_out=d_out, l_sigma=l_sigma, alpha=alpha,
                     dbar=dbar, n_max=n_max, v0=params0.v, v_star=teacher.v)


def _record(traj, t, work, params, kind, teacher, W0, consts):
    resid, _ = work.residual(params, kind)
    loss = float(resid @ resid) / work.n
    traj.max_w_norm_err = max(traj.max_w_norm_err,
                              abs(float(np.linalg.norm(params.W)) - 1.0))
    if teacher is None:
        traj.append(t, None, None, loss, None, None)
    else:
        dw = float(np.linalg.norm(params.W - teacher.W))
        dv = float(np.linalg.norm(params.v - teacher.v))
        cw, cv = check_confinement(params.W, params.v, teacher.W, teacher.v,
                                   W0, consts)
        traj.append(t, dw, dv, loss, cw, cv)
    return loss


def _run(work, params, kind, xi, alpha, t_start, t_end, traj, teacher, W0,
         consts, cond_threshold):
    """Advance from epoch t_start to t_end, appending one row per new epoch."""
    for t in range(t_start, t_end):
        try:
            _, gw_raw, gv = work.grad_terms(params, kind)
            gw = -(1.0 / work.n) * solve_inverse(xi, gw_raw, cond_threshold)
            params = step(params, gw, gv, alpha)
        except (IllConditioned, DegenerateUpdate) as exc:
            exc.epoch = t + 1
            raise
        loss = _record(traj, t + 1, work, params, kind, teacher, W0, consts)
        if loss > DIVERGENCE_GUARD:
            raise Diverged(loss, t + 1, trajectory=traj)
    return params


def train(config: TrainConfig, data, teacher: Params | None = None,
          threads: int = 1) -> TrainResult:
    """Run the full loop: estimate the auxiliary matrix once, pick the
    initialization (racing all four sign combos when requested, winner by
    lowest loss after a short probe), then iterate to the epoch budget.

    Deterministic for a fixed config seed regardless of thread count.
    """
    work = _prepare(data)
    if config.mode == "ngnn" and not isinstance(data, NgnnDataset):
        raise TypeError("mode ngnn needs an NgnnDataset")
    if config.mode == "ggnn" and not isinstance(data, GgnnDataset):
        raise TypeError("mode ggnn needs a GgnnDataset")

    d = _feature_dim(data)
    d_out = teacher.d_out if teacher is not None else config.d_out
    xi = _estimate_xi(config, data, d, threads)
    candidates = init_params(d, d_out, config.init_mode, config.seed, teacher)

    def consts_for(p0):
        if teacher is None:
            return None
        return _confinement_consts(config.mode, p0, teacher, d, d_out,
                                   config.kind.l_sigma, config.alpha,
                                   work.dbar, work.n_max)

    if len(candidates) == 1:
        winner = candidates[0]
        traj, consts = TrajectoryRecord(), consts_for(winner)
        _record(traj, 0, work, winner, config.kind, teacher, winner.W, consts)
        state, probe_done = winner, 0
    else:
        probe = min(config.epochs, PROBE_EPOCHS)
        raced = []
        for cand in candidates:
            tr = TrajectoryRecord()
            cc = consts_for(cand)
            _record(tr, 0, work, cand, config.kind, teacher, cand.W, cc)
            p = _run(work, cand, config.kind, xi, config.alpha, 0, probe, tr,
                     teacher, cand.W, cc, config.cond_threshold)
            raced.append((tr.loss[-1], p, tr, cand, cc))
        # lowest probe loss wins; ties resolve in combo order
        best = min(range(len(raced)), key=lambda i: raced[i][0])
        _, state, traj, winner, consts = raced[best]
        probe_done = probe

    final = _run(work, state, config.kind, xi, config.alpha, probe_done,
                 config.epochs, traj, teacher, winner.W, consts,
                 config.cond_threshold)
    return TrainResult(params=final, trajectory=traj, xi=xi)


def _feature_dim(data) -> int:
    if isinstance(data, NgnnDataset):
        return data.H.shape[1]
    return data.graphs[0][1].shape[1]


def _estimate_xi(config: TrainConfig, data, d: int, threads: int) -> XiOperator:
    if isinstance(data, NgnnDataset):
        P = conv_operator(data.graph)
        if config.xi_method == "empirical":
            return estimate_xi_ngnn(P, d, config.kind, method="empirical", H=data.H)
        return estimate_xi_ngnn(P, d, config.kind, method="monte_carlo",
                                samples=config.xi_samples, seed=config.seed,
                                threads=threads)
    pairs = [(conv_operator(g), a) for g, _, a in data.graphs]
    if config.xi_method == "empirical":
        return estimate_xi_ggnn(pairs, d, config.kind, method="empirical",
                                H_list=[H for _, H, _ in data.graphs])
    return estimate_xi_ggnn(pairs, d, config.kind, method="monte_carlo",
                            samples=config.xi_samples, seed=config.seed,
                            threads=threads)


# ---------------------------------------------------------------------------
# trajectory CSV (schema: epoch,dist_w,dist_v,loss,confined_w,confined_v)

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "1" if x else "0"
    return f"{x:.17g}"


def trajectory_to_csv(traj: TrajectoryRecord) -> str:
    lines = ["epoch,dist_w,dist_v,loss,confined_w,confined_v"]
    for i in range(len(traj)):
        lines.append(",".join([
            str(traj.epoch[i]), _fmt(traj.dist_w[i]), _fmt(traj.dist_v[i]),
            _fmt(traj.loss[i]), _fmt(traj.confined_w[i]), _fmt(traj.confined_v[i]),
        ]))
    return "\n".join(lines) + "\n"


def save_trajectory(traj: TrajectoryRecord, path) -> None:
    with open(path, "w") as fh:
        fh.write(trajectory_to_csv(traj))
