"""Exception types shared across the package.

Everything derives from DyncovError so callers can catch the library's
failures with one except clause. ValueError mixins keep the usual numpy
idiom (bad argument -> ValueError) working for generic call sites.
"""


class DyncovError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(DyncovError, ValueError):
    """An argument violates a documented precondition."""


class InsufficientDataError(DyncovError, ValueError):
    """Not enough observations to perform the requested computation."""


class DegenerateWindowError(DyncovError):
    """A kernel window carries no weight, so a local fit is impossible."""


class DegenerateIndexError(DyncovError):
    """Index values are all identical; no bandwidth can be formed."""


class EmptyWindowError(DyncovError):
    """A conditioning point has zero total kernel weight."""


class CvFailureError(DyncovError):
    """Every cross-validation candidate failed on every fold."""


class FitFailureError(DyncovError):
    """An optimizer failed to produce a usable fit.

    The best iterate seen, if any, is attached as ``best_fit`` for
    diagnostics.
    """

    def __init__(self, message, best_fit=None):
        super().__init__(message)
        self.best_fit = best_fit


class DegenerateFrontierError(DyncovError):
    """Mean vector proportional to ones: the frontier system is singular."""


class ParseError(DyncovError, ValueError):
    """A data file does not follow the expected layout.

    Carries the 1-based ``line_number`` of the offending line when known.
    """

    def __init__(self, message, line_number=None):
        super().__init__(message)
        self.line_number = line_number


class EmptyDatasetError(DyncovError):
    """A parsed file contains a header but no usable data rows."""
