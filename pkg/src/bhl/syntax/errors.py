from __future__ import annotations

from typing import Optional


class BhlError(Exception):
    """Base class for user-facing errors."""

    def __init__(self, message: str, span=None, source: Optional[str] = None):
        self.message = message
        self.span = span
        self.source = source
        super().__init__(self.render())

    def render(self) -> str:
        where = ""
        if self.source:
            where = self.source
        if self.span is not None:
            where = f"{where}:{self.span}" if where else str(self.span)
        return f"{where}: {self.message}" if where else self.message


class ParseError(BhlError):
    pass


class DeclError(BhlError):
    pass


class WellFormedError(BhlError):
    pass


class ParInterference(WellFormedError):
    def __init__(self, variables, span=None):
        self.variables = sorted(variables)
        super().__init__(
            "parallel branches interfere on " + ", ".join(self.variables), span)
