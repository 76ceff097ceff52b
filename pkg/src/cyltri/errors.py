"""Exception hierarchy.

Estimation failures derive from :class:`EstimationError`; malformed input
derives from :class:`InvalidInput`. The CLI maps the two families to
distinct exit codes.
"""

from __future__ import annotations


class CylinderError(Exception):
    """Base class for all package errors."""


class EstimationError(CylinderError):
    """A solver could not produce an estimate from otherwise valid input."""


class InvalidInput(CylinderError, ValueError):
    """Input data violates a documented precondition or schema."""


class InvalidConfig(InvalidInput):
    pass


class DirectionInconsistent(EstimationError):
    """A silhouette line does not contain the supplied axis direction."""


class DegenerateConic(EstimationError):
    """Dual conic has its centre at infinity (d6 ~ 0)."""


class ImaginaryRadius(EstimationError):
    """Dual conic lies on the circle manifold but has r^2 <= 0."""


class RankDeficient(EstimationError):
    pass


class DegenerateLines(EstimationError):
    """Three lines do not give three independent tangency equations."""


class NonFiniteSolutionSet(EstimationError):
    """Polynomial system has a continuum of solutions."""


class NoRealCircle(EstimationError):
    pass


class EliminationSingular(EstimationError):
    pass


class NoConsensus(EstimationError):
    pass


class NotACircle(EstimationError):
    """Linear baseline produced a conic that cannot be read as a circle."""

    def __init__(self, message: str, conic_class: str):
        super().__init__(message)
        self.conic_class = conic_class


class TriangulationError(EstimationError):
    """Pipeline failure tagged with the stage that raised it."""

    def __init__(self, stage: str, cause: CylinderError):
        super().__init__(f"{stage} stage failed: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
