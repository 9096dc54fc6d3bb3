"""Source locations and diagnostics shared by every pipeline stage."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Loc:
    """Position inside an input file. line is 1-indexed, col 0-indexed."""

    file: str
    line: int
    col: int

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


UNKNOWN_LOC = Loc("<unknown>", 0, 0)


@dataclass
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    loc: Loc
    rule: str = ""

    def __str__(self) -> str:
        tag = f" [{self.rule}]" if self.rule else ""
        return f"{self.loc}: {self.severity}: {self.message}{tag}"


class GazelleError(Exception):
    """Base class for errors raised by the toolchain."""

    def __init__(self, message: str, loc: Loc = UNKNOWN_LOC):
        super().__init__(f"{loc}: {message}")
        self.message = message
        self.loc = loc


class ParseError(GazelleError):
    pass


class SpecError(GazelleError):
    """Malformed specification payload."""


class TranslationError(GazelleError):
    """Input falls outside the supported source fragment."""

    def __init__(self, message: str, loc: Loc = UNKNOWN_LOC, construct: str = ""):
        super().__init__(message, loc)
        self.construct = construct
