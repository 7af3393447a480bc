"""Exception types shared across the package.

The CLI maps these onto exit codes: DataError -> 3, NumericError -> 4.
"""


class DyntexError(Exception):
    """Base class for all package errors."""


class ShapeError(DyntexError, ValueError):
    """Tensor or clip dimensions do not match what an operation requires."""


class DataError(DyntexError):
    """Bad input data: broken frame directories, malformed models, invalid clips."""


class DegenerateVideoError(DataError):
    """A metric received an input it is undefined on (e.g. a static video)."""


class NumericError(DyntexError):
    """Non-finite values where finite ones are required (NaN watchdog)."""
