"""Exception hierarchy shared across the pipeline.

Every error that crosses a module boundary subclasses CoverForgeError and
carries a stable ``code`` string used by the HTTP layer and job manifests.
"""

from __future__ import annotations


class CoverForgeError(Exception):
    """Base class; ``code`` is the machine-readable identifier."""

    code = "InternalError"

    def __init__(self, message: str = "", *, field: str | None = None):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.field = field


# --- ingest ---

class UnsupportedFormat(CoverForgeError):
    code = "UnsupportedFormat"


class CorruptAudio(CoverForgeError):
    code = "CorruptAudio"


class EmptyAudio(CoverForgeError):
    code = "EmptyAudio"


class CorruptImage(CoverForgeError):
    code = "CorruptImage"


class TooSmall(CoverForgeError):
    code = "TooSmall"


# --- backends ---

class BackendUnavailable(CoverForgeError):
    code = "BackendUnavailable"


class BackendBusy(CoverForgeError):
    code = "BackendBusy"


class GenerationTimeout(CoverForgeError):
    code = "GenerationTimeout"


class ProtocolError(CoverForgeError):
    code = "ProtocolError"


# --- captioning ---

class AllCandidatesFiltered(CoverForgeError):
    """Every caption candidate fell below the filter threshold.

    ``best_candidate`` holds the top unfiltered candidate so callers can
    fall back to it (recording a warning) instead of dead-ending.
    """

    code = "AllCandidatesFiltered"

    def __init__(self, message: str = "", *, best_candidate=None):
        super().__init__(message)
        self.best_candidate = best_candidate


class PartialFailure(CoverForgeError):
    """Some audio windows failed to caption.

    Carries the failed ``indices`` and the successful ``records`` so the
    caller can apply the >= 50% tolerance policy.
    """

    code = "PartialFailure"

    def __init__(self, message: str = "", *, indices=None, records=None):
        super().__init__(message)
        self.indices = list(indices or [])
        self.records = list(records or [])


# --- vision ---

class BadThresholds(CoverForgeError):
    code = "BadThresholds"


class ShapeMismatch(CoverForgeError):
    code = "ShapeMismatch"


# --- generation / qr ---

class InvalidParams(CoverForgeError):
    code = "InvalidParams"


class PayloadTooLarge(CoverForgeError):
    code = "PayloadTooLarge"


# --- orchestrator / service ---

class ValidationFailed(CoverForgeError):
    """Admission-time validation failure; ``reasons`` maps field -> message."""

    code = "ValidationFailed"

    def __init__(self, message: str = "", *, reasons: dict[str, str] | None = None):
        super().__init__(message)
        self.reasons = dict(reasons or {})


class QueueFull(CoverForgeError):
    code = "QueueFull"


class NotFound(CoverForgeError):
    code = "NotFound"


class TransitionError(CoverForgeError):
    """Attempted an illegal job state transition; the store rejects it."""

    code = "TransitionError"
