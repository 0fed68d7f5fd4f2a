"""Exception hierarchy shared by every coasearch module."""

from __future__ import annotations


class CoaError(Exception):
    """Base class for all errors raised by coasearch."""


class InputError(CoaError):
    """Malformed or invalid input. The CLI maps these to exit status 1."""


class ParseError(InputError):
    def __init__(self, message: str, lineno: int | None = None, source: str | None = None):
        self.lineno = lineno
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}".strip() if where else message)
        self.message = message


class DuplicateIdError(ParseError):
    pass


class ValidationError(InputError):
    """A structurally parsed object violates a model invariant."""


class ScoreDomainError(ValidationError):
    pass


class MissingCveError(ValidationError):
    def __init__(self, missing: list[tuple[int, str]]):
        self.missing = missing
        listed = ", ".join(f"node {vid} -> {cve!r}" for vid, cve in missing)
        super().__init__(f"CVE not found in vulnerability database: {listed}")


class UnsupportedInputError(InputError):
    """The input is valid but outside what the requested operation supports."""


class GuardExceededError(UnsupportedInputError):
    pass


class DegenerateQueryError(InputError):
    pass


class VertexLookupError(InputError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown vertex"


class NoPathError(CoaError):
    """The target cannot be reached from the source. The CLI maps this to exit 2."""

    def __init__(self, source: int, target: int):
        self.source = source
        self.target = target
        super().__init__(f"target {target} is unreachable from source {source}")
