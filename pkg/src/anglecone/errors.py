class AngleConeError(Exception):
    """Base class for all package errors (CLI exit code 1)."""


class DegenerateInputError(AngleConeError):
    """x coincides with p or q (CLI exit code 2)."""


class CapabilityError(AngleConeError):
    """The space lacks a capability the operation needs."""


class PointError(AngleConeError):
    """A point does not belong to the space it was used with."""


class DisconnectedGraphError(AngleConeError):
    pass


class EstimationError(AngleConeError):
    """Numerical estimation produced no usable value."""
