"""Exception hierarchy shared by every module of the package."""


class PPGMRESError(Exception):
    """Base class for all errors raised by ppgmres."""


class UsageError(PPGMRESError, ValueError):
    """Bad arguments: wrong dimensions, out-of-range parameters, zero vectors."""


class NumericalError(PPGMRESError, ArithmeticError):
    """A computation could not produce a trustworthy result."""


class InvariantError(PPGMRESError, AssertionError):
    """An internal data-structure invariant was violated."""


class MatrixMarketError(PPGMRESError, ValueError):
    """Malformed Matrix Market file."""


class UnsupportedFormatError(MatrixMarketError):
    """Well-formed Matrix Market file of a kind we do not read (complex, pattern, array)."""


class BasisLimitError(PPGMRESError, MemoryError):
    """Unrestarted GMRES needed more basis vectors than the configured cap."""
