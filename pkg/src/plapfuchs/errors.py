"""Exception hierarchy shared by the library and the CLI.

Each class carries the CLI exit code it maps to.
"""


class PlapError(Exception):
    exit_code = 1


class UsageError(PlapError):
    exit_code = 2


class ScenarioParseError(UsageError):
    """Malformed scenario file; ``line``/``column`` are 1-based when known."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)


class DomainError(PlapError, ValueError):
    """Argument outside the mathematical domain of an operation."""

    exit_code = 3


class PreconditionError(PlapError, ValueError):
    exit_code = 3


class NumericError(PlapError, RuntimeError):
    """A numerical procedure failed; ``info`` holds diagnostics."""

    exit_code = 4

    def __init__(self, message, **info):
        self.info = info
        super().__init__(message)


class SolvabilityError(NumericError):
    """No positive solution could be bracketed."""


class CheckFailure(PlapError):
    exit_code = 5
