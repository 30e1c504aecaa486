"""Exceptions that carry problem reports across the pipeline."""
from __future__ import annotations

from .reports import ProblemReport


class FragmentcError(Exception):
    """Base class; ``reports`` always holds at least one entry."""

    def __init__(self, reports: list[ProblemReport]):
        self.reports = list(reports)
        super().__init__("; ".join(r.format() for r in self.reports))


class MetaParseError(FragmentcError):
    """Raised when a grammar or tool-config file does not parse."""


class ComposeError(FragmentcError):
    """Raised when inheritance flattening, embedding, or bundling fails."""


class EngineBuildError(FragmentcError):
    """Raised when a composed language cannot be compiled to a parser."""
