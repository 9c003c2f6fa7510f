"""
Error categories shared by the library and the command line.

Every category carries the process exit code the CLI uses for it.
"""

from typing import Optional


class OscLabError(Exception):
    """Base class for all expected failures"""

    exit_code = 1


class ConfigError(OscLabError):
    exit_code = 2

    def __init__(self, message: str, line: Optional[int] = None, source: Optional[str] = None):
        self.line = line
        self.source = source
        where = ""
        if source:
            where = f"{source}:"
        if line is not None:
            where = f"{where}{line}: "
        elif where:
            where = f"{where} "
        super().__init__(f"{where}{message}")


class InvalidParametersError(OscLabError, ValueError):
    exit_code = 3


class StalledNetworkError(OscLabError, RuntimeError):
    exit_code = 4


class InsufficientDataError(OscLabError, ValueError):
    exit_code = 5


class EncodingDomainError(OscLabError, ValueError):
    exit_code = 6


class ParseError(OscLabError, ValueError):
    exit_code = 7

    def __init__(self, message: str, line: Optional[int] = None, source: Optional[str] = None):
        self.line = line
        self.source = source
        prefix = f"{source or '<input>'}:{line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class OracleSizeError(OscLabError, ValueError):
    exit_code = 8


class ArityError(OscLabError, ValueError):
    exit_code = 9
