"""Batch experiment runner: run / verify / sweep / xi-estimate / theory-report.

Config files are flat key=value text with '#' comments; every key mirrors a
CLI flag of the same name and an explicit flag wins. Exit codes: 0 success,
2 config error, 3 numerical failure, 4 verification failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import fields, replace

import numpy as np

from ._svg import render_lines
from .activation import parse_kind
from .errors import (
    ConfigError, DegenerateUpdate, Diverged, GnnLabError, IllConditioned,
)
from .experiments import (
    PRESETS, ExperimentSpec, build_dataset, derive_seeds, run_experiment,
)
from .graph import avg_inv_degree, conv_operator, er_graph, load_edge_list
from .teacher import sample_teacher
from .theory import constants, error_terms, sample_condition
from .trainer import draw_init, trajectory_to_csv
from .verify import run_suite
from .xi import estimate_xi_ggnn, estimate_xi_ngnn, save_xi_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3
EXIT_VERIFY = 4

_SPEC_FIELDS = [f.name for f in fields(ExperimentSpec)]
_INT_KEYS = {"d", "d_out", "n", "n_graphs", "nodes", "epochs", "seed",
             "xi_samples", "threads"}
_FLOAT_KEYS = {"p", "alpha", "noise_var", "c_abs"}


def _write_atomic(path: str, text: str) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def read_config(path: str) -> dict:
    """Parse a flat key=value config file; errors carry line numbers."""
    out = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(
                    f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if not key or not value:
                raise ConfigError(f"{path}:{lineno}: empty key or value")
            try:
                if key in _INT_KEYS:
                    out[key] = int(value)
                elif key in _FLOAT_KEYS:
                    out[key] = float(value)
                else:
                    out[key] = value
            except ValueError:
                raise ConfigError(
                    f"{path}:{lineno}: bad numeric value {value!r} for {key}"
                ) from None
    return out


def _add_spec_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--preset", choices=sorted(PRESETS),
                   help="expand a built-in replication config")
    p.add_argument("--mode", choices=["ngnn", "ggnn"])
    p.add_argument("--activation", help="e.g. relu, leaky_relu:0.2, sigmoid")
    p.add_argument("--d", type=int)
    p.add_argument("--d-out", type=int, dest="d_out")
    p.add_argument("--n", type=int, help="node count (node-level mode)")
    p.add_argument("--n-graphs", type=int, dest="n_graphs")
    p.add_argument("--nodes", type=int, help="nodes per graph (graph-level mode)")
    p.add_argument("--p", type=float, help="edge probability")
    p.add_argument("--alpha", type=float, help="step size")
    p.add_argument("--epochs", type=int)
    p.add_argument("--noise-var", type=float, dest="noise_var")
    p.add_argument("--aggregation", help='"uniform" or "particular:<i>"')
    p.add_argument("--init-mode", choices=["oracle_signs", "random_signsearch"],
                   dest="init_mode")
    p.add_argument("--xi-method", choices=["monte_carlo", "empirical"],
                   dest="xi_method")
    p.add_argument("--xi-samples", type=int, dest="xi_samples")
    p.add_argument("--c-abs", type=float, dest="c_abs")


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--config", help="key=value config file (flags win)")
    p.add_argument("--threads", type=int, default=None)


def _build_parser():
    parser = argparse.ArgumentParser(prog="gnnlab")
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {}

    commands["run"] = sub.add_parser("run", help="synthesize, train, write CSV/SVG")
    _add_spec_flags(commands["run"])
    _add_common_flags(commands["run"])

    commands["verify"] = sub.add_parser("verify", help="run a named property suite")
    commands["verify"].add_argument(
        "suite", choices=["activations", "gradients", "xi", "confinement", "rate"])
    _add_common_flags(commands["verify"])

    commands["sweep"] = sub.add_parser(
        "sweep", help="run a grid of configs, aggregate final distances")
    _add_spec_flags(commands["sweep"])
    _add_common_flags(commands["sweep"])
    commands["sweep"].add_argument("--n-list", dest="n_list",
                                   help="comma-separated node counts")
    commands["sweep"].add_argument("--seed-list", dest="seed_list",
                                   help="comma-separated seeds")

    commands["xi-estimate"] = sub.add_parser(
        "xi-estimate", help="estimate the auxiliary matrix, dump CSV")
    _add_spec_flags(commands["xi-estimate"])
    _add_common_flags(commands["xi-estimate"])
    commands["xi-estimate"].add_argument(
        "--graph", help="edge-list file to use instead of sampling (node-level)")

    commands["theory-report"] = sub.add_parser(
        "theory-report", help="print constants, step-size bound, sample condition")
    _add_spec_flags(commands["theory-report"])
    _add_common_flags(commands["theory-report"])
    return parser, commands


def _parse(argv):
    parser, commands = _build_parser()
    pre, _ = parser.parse_known_args(argv)
    if getattr(pre, "config", None):
        cfg = read_config(pre.config)
        subparser = commands[pre.command]
        known = {a.dest for a in subparser._actions}
        bad = sorted(set(cfg) - known)
        if bad:
            raise ConfigError(
                f"{pre.config}: keys not valid for {pre.command!r}: {bad}")
        subparser.set_defaults(**cfg)
    return parser.parse_args(argv)


def _spec_from_args(args) -> ExperimentSpec:
    base = PRESETS[args.preset] if getattr(args, "preset", None) else ExperimentSpec()
    overrides = {name: getattr(args, name) for name in _SPEC_FIELDS
                 if getattr(args, name, None) is not None}
    spec = replace(base, **overrides)
    parse_kind(spec.activation)  # validate the activation string early
    return spec


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("GNNLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"bad GNNLAB_THREADS value {env!r}") from None
    return 1


# ---------------------------------------------------------------------------
# subcommands

def _cmd_run(args) -> int:
    spec = _spec_from_args(args)
    os.makedirs(args.out, exist_ok=True)
    res = run_experiment(spec, threads=_threads(args))
    traj = res.train_result.trajectory
    csv_path = os.path.join(args.out, "trajectory.csv")
    _write_atomic(csv_path, trajectory_to_csv(traj))
    svg = render_lines(
        [("dist_w", traj.epoch, traj.dist_w), ("dist_v", traj.epoch, traj.dist_v)],
        f"{spec.mode} {spec.activation} (alpha={spec.alpha:g}, seed={spec.seed})",
    )
    _write_atomic(os.path.join(args.out, "trajectory.svg"), svg)
    summary = (f"final dist_w={res.final_dist_w:.6g} dist_v={res.final_dist_v:.6g} "
               f"loss={res.final_loss:.6g} "
               f"confinement_violations={res.confinement_violations}")
    _write_atomic(os.path.join(args.out, "summary.txt"), summary + "\n")
    print(summary)
    print(f"wrote {csv_path}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    rows = run_suite(args.suite, seed=args.seed if args.seed is not None else 0,
                     threads=_threads(args))
    ok = True
    for name, passed, detail in rows:
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
    return EXIT_OK if ok else EXIT_VERIFY


def _cmd_sweep(args) -> int:
    base = _spec_from_args(args)
    n_list = ([int(x) for x in args.n_list.split(",")] if args.n_list
              else [base.n])
    seed_list = ([int(x) for x in args.seed_list.split(",")] if args.seed_list
                 else [base.seed])
    jobs = [(n, s) for n in n_list for s in seed_list]

    def one(job):
        n, s = job
        r = run_experiment(replace(base, n=n, seed=s))
        return n, s, r.final_dist_w, r.final_dist_v

    threads = _threads(args)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, jobs))
    else:
        results = [one(j) for j in jobs]
    results.sort()
    lines = ["n,seed,final_dist_w,final_dist_v"]
    lines += [f"{n},{s},{dw:.17g},{dv:.17g}" for n, s, dw, dv in results]
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "sweep.csv")
    _write_atomic(path, "\n".join(lines) + "\n")
    print(f"wrote {path} ({len(results)} rows)")
    return EXIT_OK


def _cmd_xi_estimate(args) -> int:
    spec = _spec_from_args(args)
    kind = parse_kind(spec.activation)
    graph_seed, teacher_seed, data_seed, _ = derive_seeds(spec.seed)
    threads = _threads(args)
    if spec.mode == "ngnn":
        g = (load_edge_list(args.graph) if getattr(args, "graph", None)
             else er_graph(spec.n, spec.p, graph_seed))
        if spec.xi_method == "empirical":
            H = np.random.default_rng(data_seed).standard_normal((g.n, spec.d))
            op = estimate_xi_ngnn(conv_operator(g), spec.d, kind,
                                  method="empirical", H=H)
        else:
            op = estimate_xi_ngnn(conv_operator(g), spec.d, kind,
                                  samples=spec.xi_samples, seed=spec.seed,
                                  threads=threads)
    else:
        teacher = sample_teacher(spec.d, spec.d_out, teacher_seed)
        ds = build_dataset(spec, teacher, graph_seed, data_seed)
        pairs = [(conv_operator(g), a) for g, _, a in ds.graphs]
        if spec.xi_method == "empirical":
            op = estimate_xi_ggnn(pairs, spec.d, kind, method="empirical",
                                  H_list=[H for _, H, _ in ds.graphs])
        else:
            op = estimate_xi_ggnn(pairs, spec.d, kind, samples=spec.xi_samples,
                                  seed=spec.seed, threads=threads)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, "xi.csv")
    save_xi_csv(op, path)
    print(f"wrote {path} (source={op.source}, cond={op.cond:.6g})")
    return EXIT_OK


def _cmd_theory_report(args) -> int:
    spec = _spec_from_args(args)
    kind = parse_kind(spec.activation)
    graph_seed, teacher_seed, data_seed, train_seed = derive_seeds(spec.seed)
    teacher = sample_teacher(spec.d, spec.d_out, teacher_seed)
    init = draw_init(spec.d, spec.d_out, train_seed)
    # oracle-sign orientation, matching the runner's experiment setting
    sw = -1.0 if float(np.trace(teacher.W.T @ init.W)) < 0 else 1.0
    sv = -1.0 if float(teacher.v @ init.v) < 0 else 1.0
    v0 = sv * init.v
    W0 = sw * init.W
    nu = float(np.sqrt(spec.noise_var))
    threads = _threads(args)

    if spec.mode == "ngnn":
        g = er_graph(spec.n, spec.p, graph_seed)
        dbar = avg_inv_degree(g)
        d_min = g.min_degree
        op = estimate_xi_ngnn(conv_operator(g), spec.d, kind,
                              samples=spec.xi_samples, seed=spec.seed,
                              threads=threads)
        const = constants("ngnn", d=spec.d, d_out=spec.d_out,
                          l_sigma=kind.l_sigma, alpha=spec.alpha,
                          v0=v0, v_star=teacher.v, dbar=dbar,
                          d_min=d_min, c_abs=spec.c_abs)
        n_samples = spec.n
        extras = [f"dbar={dbar:.17g} d_min={d_min}"]
    else:
        ds = build_dataset(spec, teacher, graph_seed, data_seed)
        pairs = [(conv_operator(g), a) for g, _, a in ds.graphs]
        op = estimate_xi_ggnn(pairs, spec.d, kind, samples=spec.xi_samples,
                              seed=spec.seed, threads=threads)
        const = constants("ggnn", d=spec.d, d_out=spec.d_out,
                          l_sigma=kind.l_sigma, alpha=spec.alpha,
                          v0=v0, v_star=teacher.v, n_max=ds.n_max,
                          c_abs=spec.c_abs)
        n_samples = spec.n_graphs
        extras = [f"n_max={ds.n_max}"]

    xi_inv_norm = float(1.0 / np.linalg.svd(op.xi, compute_uv=False)[-1])
    tr_w = float(np.trace(teacher.W.T @ W0))
    cond = sample_condition(const, n=n_samples, sigma0=kind.sigma0, nu=nu,
                            xi_inv_norm=xi_inv_norm, tr_w=tr_w)
    terms = error_terms(const, n=n_samples, xi_inv_norm=xi_inv_norm,
                        sigma0=kind.sigma0, nu=nu)

    print(f"mode={spec.mode} activation={spec.activation} d={spec.d} "
          f"d_out={spec.d_out} alpha={spec.alpha:.17g} n={n_samples}")
    for line in extras:
        print(line)
    print(f"l_sigma={kind.l_sigma:.17g} sigma0={kind.sigma0:.17g} "
          f"nu={nu:.17g} c_abs={spec.c_abs:.17g}")
    print(f"gamma1={const.gamma1:.17g} radicand={const.gamma1_radicand:.17g} "
          f"valid={int(const.gamma1_valid)}")
    print(f"gamma2={const.gamma2:.17g}")
    print(f"gamma3={const.gamma3:.17g}")
    print(f"D={const.D:.17g} rho={const.rho:.17g} D0={const.D0:.17g}")
    within = spec.alpha <= const.alpha_max
    print(f"alpha_max={const.alpha_max:.17g} alpha_within_bound={int(within)}")
    print(f"init: tr_w0={tr_w:.17g} v_inner={float(teacher.v @ v0):.17g}")
    print(f"xi: cond={op.cond:.17g} inv_norm={xi_inv_norm:.17g}")
    print(f"sample_condition: lhs={cond.lhs:.17g} rhs={cond.rhs:.17g} "
          f"holds={int(cond.holds)}")
    print(f"a_w_bar={terms.a_w_bar:.17g} eta_w={terms.eta_w:.17g}")
    print(f"a_v_bar={terms.a_v_bar:.17g} eta_v={terms.eta_v:.17g}")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        args = _parse(argv)
        handler = {
            "run": _cmd_run,
            "verify": _cmd_verify,
            "sweep": _cmd_sweep,
            "xi-estimate": _cmd_xi_estimate,
            "theory-report": _cmd_theory_report,
        }[args.command]
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (Diverged, IllConditioned, DegenerateUpdate) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except GnnLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
