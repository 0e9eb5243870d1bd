"""Exception hierarchy shared across the package."""

from __future__ import annotations


class GraphMemError(Exception):
    """Base class for all package errors."""


# graph store


class GraphError(GraphMemError):
    pass


class EmptyLabel(GraphError, ValueError):
    pass


class EmptyField(GraphError, ValueError):
    pass


class EmptyStatement(GraphError, ValueError):
    pass


class UnknownId(GraphError, KeyError):
    def __str__(self) -> str:
        return f"unknown id: {self.args[0]!r}" if self.args else "unknown id"


class UnknownMember(UnknownId):
    pass


class MemberKindViolation(GraphError, ValueError):
    pass


class KnowledgeKindError(GraphError, ValueError):
    """Raised when asked to remove something that is not replaceable knowledge."""


class FormatError(GraphError):
    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {message}" if where else message)


# embeddings


class EmbeddingError(GraphMemError):
    pass


class EmptyText(EmbeddingError, ValueError):
    pass


class DimensionMismatch(EmbeddingError, ValueError):
    pass


class ProviderUnavailable(EmbeddingError):
    pass


# llm gateway


class LLMError(GraphMemError):
    pass


class TransportError(LLMError):
    pass


class Timeout(TransportError):
    pass


class BudgetExhausted(TransportError):
    pass


class MockMiss(TransportError):
    """A scripted client received a request none of its matchers accept."""


# parsing of model output


class ParseError(GraphMemError, ValueError):
    pass


# pipelines


class NoMatches(GraphMemError):
    pass


class MissingRawData(GraphMemError, FileNotFoundError):
    pass


class SchemaError(GraphMemError, ValueError):
    pass


class ConfigError(GraphMemError, ValueError):
    pass
