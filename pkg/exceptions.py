"""
Exception hierarchy for the information design laboratory.

All errors derive from ValueError so callers that only know about bad input
keep working; the CLI maps them onto exit code 3.
"""

from typing import Optional


class InfoDesignError(ValueError):
    """Base class for every input or usage error raised by the package."""


class GameFormatError(InfoDesignError):
    """A game, strategy or goal file could not be parsed."""

    def __init__(self, message: str, section: Optional[str] = None, line: Optional[int] = None):
        self.section = section
        self.line = line
        location = []
        if section:
            location.append(f"section [{section}]")
        if line is not None:
            location.append(f"line {line}")
        suffix = f" ({', '.join(location)})" if location else ""
        super().__init__(f"{message}{suffix}")


class ShapeMismatchError(InfoDesignError):
    """Two inputs disagree on a dimension (e.g. |Ω| in game vs strategy file)."""


class EnumerationCapError(InfoDesignError):
    """An exact enumeration would exceed the configured cell cap."""

    def __init__(self, what: str, size: int, cap: int):
        self.what = what
        self.size = size
        self.cap = cap
        super().__init__(f"{what} needs {size} cells, over the enumeration cap of {cap}")


class OffSupportSignalError(InfoDesignError):
    """A posterior was requested at a signal the signaling rule never sends."""


class ConvergenceError(InfoDesignError):
    """An iterative value solve ran out of iterations."""

    def __init__(self, message: str, residual: float):
        self.residual = residual
        super().__init__(f"{message} (last sup-norm change {residual:.3e})")
