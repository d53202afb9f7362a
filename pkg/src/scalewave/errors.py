# scalewave/errors.py
from __future__ import annotations

from typing import Optional


class ScalewaveError(Exception):
    """
    Base class for every error the CLI turns into an exit code.
    """
    code = "SCALEWAVE_ERROR"
    exit_code = 1


class ConfigError(ScalewaveError):
    code = "CONFIG_ERROR"
    exit_code = 2


class ArgumentError(ConfigError, ValueError):
    """Operation called with parameters that violate its preconditions."""
    code = "ARGUMENT_ERROR"


class RangeError(ArgumentError):
    code = "RANGE_ERROR"


class DataError(ScalewaveError):
    code = "DATA_ERROR"
    exit_code = 3


class ParseError(DataError):
    """
    Malformed input row. `line` is the 1-based line in the source file
    (the header is line 1).
    """
    code = "PARSE_ERROR"

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[str] = None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column:
            where.append(f"column '{column}'")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class NumericError(ScalewaveError):
    code = "NUMERIC_ERROR"
    exit_code = 4


def format_error_line(exc: ScalewaveError) -> str:
    """Single machine-parseable line for stderr."""
    msg = str(exc).replace("\n", " ").replace('"', "'")
    return f'error code={exc.code} exit={exc.exit_code} message="{msg}"'
