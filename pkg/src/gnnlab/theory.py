"""Convergence-theory constants, sample-size conditions, and confinement checks.

Everything here evaluates displayed formulas literally; quantities that
inherit the unknown absolute constant c are reported, never asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TheoryConstants:
    mode: str
    d: int
    d_out: int
    l_sigma: float
    alpha: float
    dbar: float | None          # node-level: average reciprocal degree
    n_max: int | None           # graph-level: largest graph size
    d_min: int | None           # node-level: smallest degree
    gamma1: float               # sqrt of the radicand below when valid, else nan
    gamma1_radicand: float
    gamma1_valid: bool
    gamma2: float
    gamma3: float
    D: float
    rho: float
    D0: float
    alpha_max: float
    c_abs: float


def _gamma_terms(mode, d, d_out, l_sigma, alpha, dbar, n_max):
    L2 = l_sigma * l_sigma
    if mode == "ngnn":
        width = d + 4.0 * d * dbar
        rad = alpha * L2 * d_out / 2.0 - 3.0 * alpha**2 * width**2 * L2 * L2
        g2 = math.sqrt(2.0 * alpha * width**2 / d_out
                       + 6.0 * alpha**2 * width**2 * L2)
        amax_w = d_out / (6.0 * width**2 * L2)
    else:
        rad = (alpha * L2 * d_out / 2.0
               - 12.0 * alpha**2 * d**2 * L2 * L2 * n_max**4)
        g2 = math.sqrt(8.0 * alpha * d**2 * n_max**4 / d_out
                       + 24.0 * alpha**2 * d**2 * L2 * L2 * n_max**2)
        amax_w = d_out / (24.0 * d**2 * L2 * n_max**4)
    return rad, g2, amax_w


def constants(mode: str, *, d: int, d_out: int, l_sigma: float, alpha: float,
              v0, v_star, dbar: float | None = None, n_max: int | None = None,
              d_min: int | None = None, c_abs: float = 1.0) -> TheoryConstants:
    """Evaluate every branch formula literally for the given configuration.

    A negative radicand for gamma1 sets gamma1_valid False (with gamma1 nan);
    the D formula then falls back to the initialization distance alone.
    """
    if mode not in ("ngnn", "ggnn"):
        raise ValueError(f"unknown mode {mode!r}")
    if alpha <= 0:
        raise ValueError("alpha must be > 0")
    if mode == "ngnn" and dbar is None:
        raise ValueError("node-level constants need dbar")
    if mode == "ggnn" and n_max is None:
        raise ValueError("graph-level constants need n_max")
    v0 = np.asarray(v0, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    L2 = l_sigma * l_sigma
    rad, g2, amax_w = _gamma_terms(mode, d, d_out, l_sigma, alpha, dbar, n_max)
    valid = rad >= 0.0
    g1 = math.sqrt(rad) if valid else math.nan
    if valid and g1 > 0.0:
        g3 = math.sqrt((2.0 * alpha + 3.0 * alpha**2 * L2 * d_out)
                       / (rad * L2 * d_out))
    else:
        g3 = math.nan

    dist0 = float(np.linalg.norm(v0 - v_star))
    vs2 = float(v_star @ v_star)
    if valid and g1 > 0.0:
        D = max(dist0, math.sqrt(2.0 * g2 * vs2 / g1 + g3))
    else:
        D = dist0
    inner = float(v0 @ v_star)
    if mode == "ngnn":
        width = d + 4.0 * d * dbar
        rho = min(inner, L2 * d_out * vs2 / (width * L2 + 1.0))
    else:
        rho = min(inner, L2 * d_out * vs2 / (2.0 * d * L2 * n_max**2 + 1.0))
    D0 = D + math.sqrt(vs2)
    alpha_max = min(1.0 / (2.0 * (dist0**2 + vs2)), amax_w)
    return TheoryConstants(
        mode=mode, d=d, d_out=d_out, l_sigma=l_sigma, alpha=alpha, dbar=dbar,
        n_max=n_max, d_min=d_min, gamma1=g1, gamma1_radicand=rad,
        gamma1_valid=bool(valid), gamma2=g2, gamma3=g3, D=D, rho=rho, D0=D0,
        alpha_max=alpha_max, c_abs=c_abs,
    )


def gamma1_alpha_root(mode: str, *, d: int, d_out: int, l_sigma: float,
                      dbar: float | None = None,
                      n_max: int | None = None) -> float:
    """Learning rate at which gamma1's radicand crosses zero (analytic root
    of the quadratic in alpha)."""
    L2 = l_sigma * l_sigma
    if mode == "ngnn":
        width = d + 4.0 * d * dbar
        return d_out / (6.0 * width**2 * L2)
    return d_out / (24.0 * d**2 * L2 * n_max**4)


@dataclass(frozen=True)
class ErrorTerms:
    """Statistical-error magnitudes; all inherit the absolute constant c."""

    a_w_bar: float
    eta_w: float
    a_v_bar: float
    eta_v: float


def error_terms(const: TheoryConstants, *, n: int, xi_inv_norm: float,
                sigma0: float, nu: float) -> ErrorTerms:
    """Reporting-only error terms for the parameter trajectories."""
    c = const.c_abs
    root = math.sqrt(math.log(n) / n)
    s0 = 1.0 + abs(sigma0)
    a_w = (4.0 / c) * root * xi_inv_norm * const.D0
    a_v = (2.0 / c) * root
    if const.mode == "ngnn":
        ratio = const.d / const.d_min
        eta_w = a_w * (const.D0 * ratio * s0 + math.sqrt(ratio) * nu)
        eta_v = a_v * (const.D0 * ratio * s0**2 + math.sqrt(ratio) * s0 * nu)
    else:
        rn = math.sqrt(const.n_max)
        eta_w = a_w * rn * (rn * s0 * const.D0 + nu)
        eta_v = a_v * rn * s0 * (rn * s0 * const.D0 + nu)
    return ErrorTerms(a_w_bar=a_w, eta_w=eta_w, a_v_bar=a_v, eta_v=eta_v)


@dataclass(frozen=True)
class SampleCondition:
    holds: bool
    lhs: float
    rhs: float


def sample_condition(const: TheoryConstants, *, n: int, sigma0: float,
                     nu: float, xi_inv_norm: float, tr_w: float) -> SampleCondition:
    """Evaluate the displayed sample-size inequality and report both sides.

    The result depends on the tunable absolute constant c, so callers should
    log it rather than hard-assert it.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    lhs = (2.0 / const.c_abs) * math.sqrt(math.log(n) / n)
    s0 = 1.0 + abs(sigma0)
    v_star_norm = const.D0 - const.D
    num_a = const.rho / (16.0 * (1.0 + const.alpha * const.rho)
                         * xi_inv_norm * const.D0) * tr_w
    num_b = const.rho / (v_star_norm * s0) if v_star_norm > 0 else math.inf
    num = min(num_a, num_b)
    if const.mode == "ngnn":
        den = (const.D0 * const.d / const.d_min**2 * s0
               + const.d / const.d_min * nu)
    else:
        den = const.n_max * s0 * const.D0 + math.sqrt(const.n_max) * nu
    rhs = num / den
    return SampleCondition(holds=bool(lhs <= rhs), lhs=lhs, rhs=rhs)


def check_confinement(W_t, v_t, W_star, v_star, W_0,
                      const: TheoryConstants) -> tuple[bool, bool]:
    """Membership of the current iterate in the provably-stable region.

    W must stay unit-norm with teacher alignment at least half the initial
    alignment; v must stay within D of the teacher output layer with teacher
    inner product at least rho.
    """
    norm_ok = abs(float(np.linalg.norm(W_t)) - 1.0) <= 1e-9
    conf_w = norm_ok and (
        float(np.trace(np.asarray(W_star).T @ W_t))
        >= float(np.trace(np.asarray(W_star).T @ W_0)) / 2.0
    )
    conf_v = (float(np.linalg.norm(np.asarray(v_t) - v_star)) <= const.D
              and float(np.asarray(v_star) @ v_t) >= const.rho)
    return bool(conf_w), bool(conf_v)
