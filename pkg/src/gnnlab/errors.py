"""Exception types shared across the package."""


class GnnLabError(Exception):
    """Base class for all package errors."""


class InvalidSize(GnnLabError):
    """A node/graph count is out of range."""


class InvalidNoise(GnnLabError):
    """Negative noise variance."""


class InvalidAggregation(GnnLabError):
    """Aggregation weights are negative or do not sum to 1."""


class ShapeError(GnnLabError):
    """Operands do not have compatible shapes."""


class NonFiniteInput(GnnLabError):
    """An activation was fed NaN or infinity."""


class IllConditioned(GnnLabError):
    """Auxiliary-matrix estimate too ill-conditioned to invert.

    Carries `cond` and `threshold`; the trainer attaches `epoch` when the
    failure happens inside a training loop.
    """

    def __init__(self, cond: float, threshold: float, epoch: int | None = None):
        self.cond = cond
        self.threshold = threshold
        self.epoch = epoch
        at = f" at epoch {epoch}" if epoch is not None else ""
        super().__init__(
            f"condition number {cond:.3e} exceeds threshold {threshold:.3e}{at}"
        )


class DegenerateUpdate(GnnLabError):
    """The pre-normalization W update collapsed to (near) zero."""

    def __init__(self, norm: float, epoch: int | None = None):
        self.norm = norm
        self.epoch = epoch
        at = f" at epoch {epoch}" if epoch is not None else ""
        super().__init__(f"update norm {norm:.3e} below 1e-14{at}")


class Diverged(GnnLabError):
    """Training loss blew past the divergence guard.

    The trajectory recorded so far is attached for inspection.
    """

    def __init__(self, loss: float, epoch: int, trajectory=None):
        self.loss = loss
        self.epoch = epoch
        self.trajectory = trajectory
        super().__init__(f"loss {loss:.3e} exceeded 1e12 at epoch {epoch}")


class ConfigError(GnnLabError):
    """Bad CLI flag or config-file entry."""
