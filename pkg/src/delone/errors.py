"""Exception hierarchy shared by all analysis modules."""


class DeloneError(Exception):
    """Base class for every error raised by this package."""


class FormatError(DeloneError):
    """A DELONE v1 file could not be parsed.

    ``row`` is the 1-based line number of the offending line, when known.
    """

    def __init__(self, message, row=None):
        self.row = row
        if row is not None:
            message = f"line {row}: {message}"
        super().__init__(message)


class ValidationError(DeloneError):
    """A point sample or region violates its invariants."""


class DuplicatePointError(ValidationError):
    pass


class UndefinedRadiusError(DeloneError):
    pass


class EmptyRegionError(DeloneError):
    pass


class BoundaryContaminationError(DeloneError):
    """The requested quantity would depend on points outside the window."""


class InsufficientWindowError(DeloneError):
    """The window is too small for the requested radius or cube size."""


class InadmissiblePatternError(DeloneError):
    pass


class CapExceededError(DeloneError):
    """Exact disjoint-copy counting was asked for more candidates than the cap."""


class SchemaError(DeloneError):
    pass
