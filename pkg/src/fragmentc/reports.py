"""Source spans and problem reports, the diagnostics currency shared by all stages."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"
    INFO = "info"


@dataclass(frozen=True, slots=True)
class Span:
    """1-based line/column range; the end column is exclusive."""

    start_line: int
    start_col: int
    end_line: int
    end_col: int

    def __post_init__(self) -> None:
        if (self.start_line, self.start_col) > (self.end_line, self.end_col):
            raise ValueError(f"span start after end: {self}")

    @property
    def start(self) -> tuple[int, int]:
        return (self.start_line, self.start_col)

    @property
    def end(self) -> tuple[int, int]:
        return (self.end_line, self.end_col)

    def contains(self, other: "Span") -> bool:
        return self.start <= other.start and other.end <= self.end

    def to_list(self) -> list[int]:
        return [self.start_line, self.start_col, self.end_line, self.end_col]

    def __str__(self) -> str:
        return f"{self.start_line}:{self.start_col}-{self.end_line}:{self.end_col}"


@dataclass(frozen=True, slots=True)
class ProblemReport:
    """A severity-tagged message anchored to a file, line, and column."""

    severity: Severity
    message: str
    file: str
    line: int = 1
    column: int = 1
    source: str = ""

    def __post_init__(self) -> None:
        if self.line < 1 or self.column < 1:
            raise ValueError(f"report position must be 1-based: {self.line}:{self.column}")
        if not self.message:
            raise ValueError("report message must be non-empty")

    def format(self) -> str:
        return f"{self.severity.value} {self.file}:{self.line}:{self.column} {self.message}"

    def to_json_dict(self) -> dict:
        return {
            "severity": self.severity.value,
            "message": self.message,
            "file": self.file,
            "line": self.line,
            "column": self.column,
            "source": self.source,
        }


def error(message: str, file: str, line: int = 1, column: int = 1, source: str = "") -> ProblemReport:
    return ProblemReport(Severity.ERROR, message, file, line, column, source)


def warning(message: str, file: str, line: int = 1, column: int = 1, source: str = "") -> ProblemReport:
    return ProblemReport(Severity.WARNING, message, file, line, column, source)


def has_errors(reports: list[ProblemReport]) -> bool:
    return any(r.severity is Severity.ERROR for r in reports)
