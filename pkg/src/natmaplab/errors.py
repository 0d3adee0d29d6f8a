"""Exception types shared across the package."""


class NatMapError(Exception):
    """Base class for all package errors."""


class NearBoundary(NatMapError):
    """A point is too close to the sphere at infinity for stable evaluation."""


class UnsupportedDimension(NatMapError):
    pass


class GridMismatch(NatMapError):
    pass


class ZeroFunction(NatMapError):
    pass


class MaxIterExceeded(NatMapError):
    pass


class SingularHessian(NatMapError):
    pass


class TailNotConverged(NatMapError):
    pass


class StencilOutOfDomain(NatMapError):
    pass


class InsufficientRadii(NatMapError):
    pass


class NoLevelsFound(NatMapError):
    pass


class DegenerateFrame(NatMapError):
    pass


class ConfigInvalid(NatMapError):
    pass


class NoResults(NatMapError):
    pass
