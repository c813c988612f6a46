"""Exception types raised across the package."""


class SubspaceError(ValueError):
    """Base class for all package errors."""


class RankDeficiency(SubspaceError):
    pass


class DimensionMismatch(SubspaceError):
    pass


class InvalidParameter(SubspaceError):
    pass


class DegenerateGap(SubspaceError):
    """The eigengap at the target dimension is (numerically) zero."""


class InsufficientData(SubspaceError):
    pass


class EnumerationTooLarge(SubspaceError):
    """Exhaustive support enumeration would exceed the configured budget."""


class InsufficientGrid(SubspaceError):
    pass
