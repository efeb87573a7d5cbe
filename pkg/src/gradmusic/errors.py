"""Error taxonomy shared across the toolkit.

Estimation failures (data-dependent, recoverable by the caller) derive from
:class:`EstimationError` and carry an optional pipeline stage label.  Misuse
of an API (bad arguments, malformed files) raises plain ``ValueError``.
"""
from __future__ import annotations


class EstimationError(Exception):
    """Base class for data-dependent estimation failures."""

    def __init__(self, message: str, *, stage: str | None = None):
        super().__init__(message)
        self.stage = stage


class SeparationUndefinedError(EstimationError):
    """Minimum separation requested for fewer than two frequencies."""


class DegenerateDataError(EstimationError):
    """Input data carries no usable signal (e.g. zero samples)."""


class IllPosedSubspaceError(EstimationError):
    """The requested singular subspace is not uniquely determined."""


class RankDeficiencyError(EstimationError):
    """A matrix that must have full column rank does not."""


class NoSignalError(EstimationError):
    """No grid point was accepted; the landscape shows no minima to refine."""


class ClusterCountError(EstimationError):
    """Accepted grid points form a number of clusters different from s."""

    def __init__(self, found: int, expected: int, *, stage: str | None = None):
        super().__init__(
            f"found {found} clusters of accepted grid points, expected {expected}",
            stage=stage,
        )
        self.found = found
        self.expected = expected


class MinimaDeficitError(EstimationError):
    """Fewer strict discrete local minima than frequencies sought."""

    def __init__(self, found: int, expected: int, *, stage: str | None = None):
        super().__init__(
            f"found {found} strict discrete local minima, need {expected}",
            stage=stage,
        )
        self.found = found
        self.expected = expected


class NumericalInstabilityError(EstimationError):
    """A numerical kernel failed (non-convergence, NaN, formula mismatch)."""
