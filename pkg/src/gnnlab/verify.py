"""Named verification suites behind the `verify` CLI subcommand.

Each suite returns (name, passed, detail) rows; the CLI prints one line per
row and exits nonzero if anything failed. The pytest suite runs stricter,
larger versions of the same checks.
"""

from __future__ import annotations

import numpy as np

from .activation import RELU, SIGMOID, SOFTPLUS, SWISH, TANH, apply, leaky_relu
from .errors import ConfigError
from .experiments import preset_spec, run_experiment
from .graph import conv_operator, er_graph, from_adjacency
from .model import Params
from .teacher import sample_teacher, synth_ggnn, synth_ngnn
from .trainer import grad_v, grad_w
from .xi import estimate_xi_ngnn

_KINDS = (RELU, leaky_relu(0.2), leaky_relu(0.05), SIGMOID, TANH, SOFTPLUS, SWISH)
_LINEAR = leaky_relu(1.0)  # identity; oracle-only activation


def suite_activations(seed: int = 0):
    rows = []
    rng = np.random.default_rng(seed)
    for kind in _KINDS:
        x1 = rng.uniform(-50, 50, size=10_000)
        x2 = rng.uniform(-50, 50, size=10_000)
        lo, hi = np.minimum(x1, x2), np.maximum(x1, x2)
        mono = np.all(apply(kind, lo) <= apply(kind, hi))
        rows.append((f"monotone[{kind}]", bool(mono), "10^4 ordered pairs"))
        c = 1.1 if kind.tag == "swish" else 1.0
        gap = np.abs(apply(kind, x1) - apply(kind, x2)) - c * np.abs(x1 - x2)
        rows.append((f"lipschitz[{kind}]", bool(np.max(gap) <= 1e-12),
                     f"C={c}, max slack {np.max(gap):.2e}"))
        if kind.sigma0 == 0.0:
            bound = np.abs(apply(kind, x1)) - np.abs(x1)
            rows.append((f"linear-growth[{kind}]", bool(np.max(bound) <= 1e-12),
                         "|sigma(x)| <= |x|"))
        else:
            # recorded, not asserted: these kinds are nonzero at the origin
            rows.append((f"sigma0[{kind}]", True,
                         f"sigma(0)={kind.sigma0:.6g} (growth bound waived)"))
    return rows


def _random_ngnn(rng, kind, noise_var=0.01):
    n = int(rng.integers(3, 21))
    d = int(rng.integers(1, 4))
    d_out = int(rng.integers(1, 3))
    g = er_graph(n, float(rng.uniform(0.2, 0.9)), int(rng.integers(2**31)))
    teacher = sample_teacher(d, d_out, int(rng.integers(2**31)))
    return synth_ngnn(g, teacher, kind, noise_var, int(rng.integers(2**31))), teacher


def _random_ggnn(rng, kind, noise_var=0.01):
    k = int(rng.integers(2, 8))
    nodes = int(rng.integers(1, 6))
    d = int(rng.integers(1, 4))
    d_out = int(rng.integers(1, 3))
    teacher = sample_teacher(d, d_out, int(rng.integers(2**31)))
    ds = synth_ggnn(k, nodes, 0.5, "uniform", teacher, kind, noise_var,
                    int(rng.integers(2**31)))
    return ds, teacher


def _fd_check(ds, params, kind, h=1e-5):
    from .model import ggnn_forward, ngnn_forward
    from .graph import conv_operator
    from .teacher import NgnnDataset

    def loss_of(v):
        p = Params(W=params.W, v=v)
        if isinstance(ds, NgnnDataset):
            yh = ngnn_forward(conv_operator(ds.graph), ds.H, p, kind)
        else:
            yh = ggnn_forward([(conv_operator(g), H, a) for g, H, a in ds.graphs],
                              p, kind)
        r = ds.y - yh
        return float(r @ r) / (2.0 * len(ds.y))

    g = grad_v(ds, params, kind)
    fd = np.empty_like(g)
    for i in range(g.shape[0]):
        e = np.zeros_like(g)
        e[i] = h
        fd[i] = (loss_of(params.v + e) - loss_of(params.v - e)) / (2 * h)
    denom = max(float(np.linalg.norm(fd)), 1e-12)
    return float(np.linalg.norm(g - fd)) / denom


def suite_gradients(seed: int = 0):
    rows = []
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        ds, teacher = _random_ngnn(rng, RELU)
        params = Params(W=teacher.W, v=rng.standard_normal(teacher.d_out))
        worst = max(worst, _fd_check(ds, params, RELU))
    for _ in range(10):
        ds, teacher = _random_ggnn(rng, TANH)
        params = Params(W=teacher.W, v=rng.standard_normal(teacher.d_out))
        worst = max(worst, _fd_check(ds, params, TANH))
    rows.append(("grad_v-finite-difference", worst <= 1e-6,
                 f"max rel err {worst:.2e}"))

    # teacher params on noise-free data: both gradients vanish
    ds, teacher = _random_ngnn(rng, RELU, noise_var=0.0)
    P = conv_operator(ds.graph)
    xi = estimate_xi_ngnn(P, teacher.d, RELU, samples=64, seed=1)
    gw = grad_w(ds, teacher, RELU, xi)
    gv = grad_v(ds, teacher, RELU)
    ok = float(np.abs(gw).max()) == 0.0 and float(np.abs(gv).max()) == 0.0
    rows.append(("zero-gradient-at-teacher", ok,
                 f"|G_W|={np.abs(gw).max():.1e} |g_v|={np.abs(gv).max():.1e}"))
    return rows


def suite_xi(seed: int = 0):
    rows = []
    # single self-looped node, d=1, half-Gaussian second moment
    g1 = from_adjacency(np.array([[1]]))
    op = estimate_xi_ngnn(conv_operator(g1), 1, RELU, samples=20_000, seed=seed)
    se = float(op.stderr[0, 0])
    err = abs(float(op.xi[0, 0]) - 0.5)
    rows.append(("single-node-relu", err <= 3 * se,
                 f"estimate {float(op.xi[0, 0]):.4f} vs 0.5 ({err / se:.2f} SE)"))

    # complete self-looped graph, identity-slope activation: the d x d value
    # is the identity matrix
    g3 = from_adjacency(np.ones((3, 3), dtype=int))
    op = estimate_xi_ngnn(conv_operator(g3), 2, _LINEAR, samples=20_000, seed=seed)
    dev = np.abs(op.xi - np.eye(2))
    ok = bool(np.all(dev <= 4 * op.stderr))
    rows.append(("complete-graph-linear", ok, f"max dev {dev.max():.4f}"))

    # identity adjacency on 4 nodes, identity-slope activation: n * I
    g4 = from_adjacency(np.eye(4, dtype=int))
    op = estimate_xi_ngnn(conv_operator(g4), 2, _LINEAR, samples=20_000, seed=seed)
    dev = np.abs(op.xi - 4.0 * np.eye(2))
    ok = bool(np.all(dev <= 4 * op.stderr))
    rows.append(("identity-adjacency-linear", ok, f"max dev {dev.max():.4f}"))

    # preconditioning identity: E[(PH)^T sigma(PH W)] = Xi W for unit W
    rng = np.random.default_rng(seed)
    g = er_graph(6, 0.6, 7)
    P = conv_operator(g)
    w = rng.standard_normal((2, 1))
    w /= np.linalg.norm(w)
    op = estimate_xi_ngnn(P, 2, RELU, samples=20_000, seed=seed + 1)
    draws = np.zeros((20_000, 2))
    for m in range(20_000):
        H = np.random.default_rng([seed + 2, m]).standard_normal((6, 2))
        B = P.matrix @ H
        draws[m] = (B.T @ apply(RELU, B @ w)).ravel()
    mc = draws.mean(axis=0)
    se = draws.std(axis=0, ddof=1) / np.sqrt(draws.shape[0])
    target = (op.xi @ w).ravel()
    dev = np.abs(mc - target)
    ok = bool(np.all(dev <= 4 * np.hypot(se, (op.stderr @ np.abs(w)).ravel())))
    rows.append(("preconditioning-identity", ok,
                 f"max dev {dev.max():.2e} vs 4 SE"))
    return rows


def suite_confinement(seed: int = 0):
    rows = []
    for preset in ("ngnn-relu", "ggnn-relu"):
        res = run_experiment(preset_spec(preset, seed=seed))
        rows.append((f"confinement[{preset}]", res.confinement_violations == 0,
                     f"{res.confinement_violations} violating epochs"))
        rows.append((f"unit-norm[{preset}]", res.max_w_norm_err <= 1e-10,
                     f"max | ||W||-1 | = {res.max_w_norm_err:.2e}"))
    return rows


def suite_rate(seed: int = 0, threads: int = 1):
    medians = {}
    for n in (250, 1000, 4000):
        finals = []
        for s in range(10):
            spec = preset_spec("ngnn-relu", n=n, seed=seed + s)
            finals.append(run_experiment(spec, threads=threads).final_dist_v)
        medians[n] = float(np.median(finals))
    detail = ", ".join(f"n={n}: {m:.4f}" for n, m in medians.items())
    decreasing = medians[250] > medians[1000] > medians[4000]
    ratio_ok = medians[4000] <= 0.6 * medians[250]
    return [
        ("rate-median-decreasing", decreasing, detail),
        ("rate-4000-vs-250", ratio_ok,
         f"ratio {medians[4000] / medians[250]:.3f} (need <= 0.6)"),
    ]


SUITES = {
    "activations": suite_activations,
    "gradients": suite_gradients,
    "xi": suite_xi,
    "confinement": suite_confinement,
    "rate": suite_rate,
}


def run_suite(name: str, seed: int = 0, threads: int = 1):
    if name not in SUITES:
        raise ConfigError(f"unknown verify suite {name!r}; known: {sorted(SUITES)}")
    if name == "rate":
        return suite_rate(seed=seed, threads=threads)
    return SUITES[name](seed=seed)
