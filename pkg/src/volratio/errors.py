"""Exception types raised across the package."""

from __future__ import annotations


class VolRatioError(Exception):
    """Base class for all package errors."""


class NotPositiveDefinite(VolRatioError):
    pass


class RankDeficient(VolRatioError):
    pass


class Unsupported(VolRatioError):
    """Operation has no closed form (or no implementation) for this body variant."""


class NotInterior(VolRatioError):
    pass


class DegenerateAcceptance(VolRatioError):
    """Rejection sampler saw too few hits to give a usable estimate."""


class DimensionMismatch(VolRatioError, ValueError):
    pass


class Singular(VolRatioError):
    pass


class SingularT(Singular):
    """Sampled Dvoretzky-Rogers matrix stayed singular after repeated draws."""


class DimensionTooLarge(VolRatioError):
    pass


class Infeasible(VolRatioError):
    pass
