"""Domain exception types shared across the engine.

The HTTP layer maps these onto structured error bodies; library callers
catch them directly.
"""


class PersodeError(Exception):
    """Base class for all domain errors."""

    code = "error"


class ValidationError(PersodeError):
    """Input failed validation. Carries the offending field when known."""

    code = "validation_error"

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class NotFoundError(PersodeError):
    code = "not_found"


class ConflictError(PersodeError):
    """Operation conflicts with current state (e.g. session already closed)."""

    code = "conflict"


class InvalidStateError(PersodeError):
    """Operation is not valid in the current state (e.g. closing an empty session)."""

    code = "invalid_state"


class StorageError(PersodeError):
    code = "storage_error"


class SchemaVersionError(StorageError):
    """Persisted record declares a schema version newer than this build supports."""

    code = "schema_version"


class ProviderUnavailable(PersodeError):
    """Upstream provider failed after retries; safe to retry later."""

    code = "provider_unavailable"


class ProtocolError(PersodeError):
    """Upstream returned a malformed response; retrying will not help."""

    code = "protocol_error"


class PolicyError(PersodeError):
    """Upstream rejected the request on content-policy grounds."""

    code = "policy_error"

    def __init__(self, message: str, reason: str = ""):
        super().__init__(message)
        self.reason = reason


class ExtractionFailed(PersodeError):
    """Structured extraction could not produce a usable record.

    Signals the caller to fall back to the rule-based extractor.
    """

    code = "extraction_failed"
