"""Exception hierarchy.

Every error raised by the library derives from :class:`RecServeError`. The CLI
maps the three families below onto exit codes (config=1, trace=2, other=3).
"""

from __future__ import annotations


class RecServeError(Exception):
    pass


class ConfigError(RecServeError, ValueError):
    """Invalid topology, method, workload spec or experiment configuration."""


class TraceError(RecServeError, ValueError):
    """Malformed trace input. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


# -- topology ---------------------------------------------------------------

class NonMonotoneCosts(ConfigError):
    pass


class DuplicateTier(ConfigError):
    pass


class TooFewTiers(ConfigError):
    pass


# -- confidence -------------------------------------------------------------

class ConfidenceError(RecServeError, ValueError):
    pass


class EmptyLogits(ConfidenceError):
    pass


class NonFiniteLogit(ConfidenceError):
    pass


class EmptySequence(ConfidenceError):
    pass


class PositiveLogProb(ConfidenceError):
    pass


class NonFiniteLogProb(ConfidenceError):
    pass


class EvidenceTypeMismatch(ConfidenceError):
    pass


# -- routing / workload -----------------------------------------------------

class MissingTierEvidence(RecServeError, ValueError):
    pass


class InvalidSpec(ConfigError):
    pass


class ParseError(TraceError):
    pass


class SchemaViolation(TraceError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.field = field
        super().__init__(message, line)


class InconsistentTierCount(TraceError):
    pass


# -- theory / calibration ---------------------------------------------------

class OutOfRange(RecServeError, ValueError):
    pass


class UnachievableBudget(RecServeError, ValueError):
    pass


class InsufficientWorkload(RecServeError, ValueError):
    pass
