"""Exception taxonomy mapped to the CLI exit codes (1/2/3)."""


class MrcpDecodeError(Exception):
    """Base class for all package errors."""

    exit_code = 1
    kind = "config"


class ConfigError(MrcpDecodeError):
    """Invalid parameters, shapes, or option combinations. Exit code 1."""

    exit_code = 1
    kind = "config"


class DataError(MrcpDecodeError):
    """Missing, malformed, or insufficient input data. Exit code 2."""

    exit_code = 2
    kind = "data"


class NumericError(MrcpDecodeError):
    """Numerical failure at runtime. Exit code 3."""

    exit_code = 3
    kind = "numeric"


class NotPositiveDefiniteError(NumericError):
    """Right-hand matrix of a generalized eigenproblem stayed indefinite after ridging."""


class DegenerateInputError(NumericError):
    """Input with no usable variance (all-constant columns, rank-zero blocks)."""


class ConvergenceError(NumericError):
    """Iterative solver hit its iteration cap before reaching tolerance."""
