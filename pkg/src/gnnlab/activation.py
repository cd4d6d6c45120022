"""Activation suite: six monotone, (near-)1-Lipschitz nonlinearities.

Each kind knows its Lipschitz-style constant `l_sigma` and its value at
zero `sigma0`, which the theory module consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NonFiniteInput

_TAGS = ("relu", "leaky_relu", "sigmoid", "tanh", "softplus", "swish")

_SIGMA0 = {
    "relu": 0.0,
    "leaky_relu": 0.0,
    "sigmoid": 0.5,
    "tanh": 0.0,
    "softplus": float(np.log(2.0)),
    "swish": 0.0,
}


@dataclass(frozen=True)
class ActivationKind:
    """One of the supported activations; `slope` only applies to leaky_relu.

    Construction allows slope in (0, 1]; slope 1 degenerates to the identity
    and exists for oracle tests. The config-string parser only admits (0, 1).
    """

    tag: str
    slope: float | None = None

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise ConfigError(f"unknown activation tag {self.tag!r}")
        if self.tag == "leaky_relu":
            if self.slope is None or not (0.0 < self.slope <= 1.0):
                raise ConfigError("leaky_relu slope must lie in (0, 1]")
        elif self.slope is not None:
            raise ConfigError(f"{self.tag} takes no slope parameter")

    @property
    def l_sigma(self) -> float:
        return 1.0

    @property
    def sigma0(self) -> float:
        return _SIGMA0[self.tag]

    def __str__(self) -> str:
        if self.tag == "leaky_relu":
            return f"leaky_relu:{self.slope:g}"
        return self.tag


RELU = ActivationKind("relu")
SIGMOID = ActivationKind("sigmoid")
TANH = ActivationKind("tanh")
SOFTPLUS = ActivationKind("softplus")
SWISH = ActivationKind("swish")


def leaky_relu(slope: float) -> ActivationKind:
    return ActivationKind("leaky_relu", slope)


def parse_kind(s: str) -> ActivationKind:
    """Parse a config string like "relu" or "leaky_relu:0.2" (case-insensitive)."""
    s = s.strip().lower()
    if ":" in s:
        tag, _, arg = s.partition(":")
        if tag != "leaky_relu":
            raise ConfigError(f"activation {tag!r} takes no parameter")
        try:
            slope = float(arg)
        except ValueError:
            raise ConfigError(f"bad leaky_relu slope {arg!r}") from None
        if not (0.0 < slope < 1.0):
            raise ConfigError("leaky_relu slope must lie in (0, 1)")
        return ActivationKind("leaky_relu", slope)
    if s not in _TAGS:
        raise ConfigError(f"unknown activation {s!r}")
    if s == "leaky_relu":
        raise ConfigError("leaky_relu needs a slope, e.g. leaky_relu:0.2")
    return ActivationKind(s)


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def apply(kind: ActivationKind, x):
    """Apply the activation elementwise to a scalar or array.

    Raises NonFiniteInput on NaN/inf entries.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("activation input contains NaN or inf")
    tag = kind.tag
    if tag == "relu":
        out = np.maximum(arr, 0.0)
    elif tag == "leaky_relu":
        out = np.where(arr >= 0.0, arr, kind.slope * arr)
    elif tag == "sigmoid":
        out = _sigmoid(arr)
    elif tag == "tanh":
        out = np.tanh(arr)
    elif tag == "softplus":
        # stable branch: max(x,0) + log(1 + exp(-|x|))
        out = np.maximum(arr, 0.0) + np.log1p(np.exp(-np.abs(arr)))
    elif tag == "swish":
        out = arr * _sigmoid(arr)
    else:  # pragma: no cover
        raise AssertionError(tag)
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out)
    return out
