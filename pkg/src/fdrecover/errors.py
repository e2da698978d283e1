"""Exception and warning types shared across the package."""


class InvalidInput(ValueError):
    """Raised when an argument violates a documented precondition."""


class SingularEigenvalue(ArithmeticError):
    """Raised when one of the leading eigenvalues needed for inversion is zero."""


class InsufficientRank(InvalidInput):
    """Raised when a spectrum has too few positive eigenvalues for a ratio rule."""


class BandwidthTooSmall(InvalidInput):
    """Raised when a kernel window contains too few points for a local line."""


class ReplicationError(RuntimeError):
    """A single Monte Carlo replication failed; the message carries its seed."""

    def __init__(self, seed, cause):
        super().__init__(f"replication with seed {seed} failed: {cause!r}")
        self.seed = seed
        self.cause = cause


class DegenerateSpectrumWarning(UserWarning):
    """The eigen-gap at the truncation level is numerically zero."""


class RankDeficiencyWarning(UserWarning):
    """Fewer positive eigenvalues than requested factors; projector was shrunk."""


class LowSignalWarning(UserWarning):
    """The first factor explains almost nothing beyond pure noise."""
