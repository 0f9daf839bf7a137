"""Exception hierarchy shared by every qtsp module."""

from __future__ import annotations


class QtspError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(QtspError, ValueError):
    pass


class DegenerateGeometryError(QtspError, ValueError):
    """Coincident consecutive points make a turning angle undefined."""


class InvalidTourError(QtspError, ValueError):
    pass


class SizeGuardError(QtspError, ValueError):
    """Raised when an enumeration would exceed its configured size guard."""


class InconsistentDataError(QtspError, ValueError):
    pass


class ParseError(QtspError, ValueError):
    """Malformed input file. ``line`` is 1-based, or ``None`` for whole-file errors."""

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
