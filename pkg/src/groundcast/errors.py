"""Exception types shared across the package."""


class GroundcastError(Exception):
    """Base class for all package errors."""


class DomainError(GroundcastError, ValueError):
    """Input violates a documented precondition or value range."""


class ConfigError(GroundcastError):
    """Inconsistent or unusable configuration."""


class TileFetchError(GroundcastError):
    """A tile provider failed to deliver a tile (possibly retryable)."""


class PairRejected(GroundcastError):
    """A photo cannot be paired with an overhead tile."""

    def __init__(self, reason: str, message: str = ""):
        super().__init__(message or reason)
        self.reason = reason


class StoreFormatError(GroundcastError):
    """Persisted region store is corrupt, truncated, or has a bad version."""


class NotFoundError(GroundcastError, KeyError):
    """Catalog lookup for an unknown region id."""


class TrainingAborted(GroundcastError):
    """Training hit a non-finite loss; carries a diagnostic snapshot."""

    def __init__(self, message: str, snapshot: dict | None = None):
        super().__init__(message)
        self.snapshot = snapshot or {}
