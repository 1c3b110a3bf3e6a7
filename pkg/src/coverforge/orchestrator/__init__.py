"""Job state machine, persistence, and end-to-end pipeline execution."""

from .engine import JobEngine, clip_to_wav_bytes, derive_seed, wav_bytes_to_clip
from .job import (
    JOB_KINDS,
    STATES,
    TRANSITIONS,
    CoverJob,
    build_manifest,
    new_job_id,
    validate_manifest,
)
from .store import JobStore, canonical_json

__all__ = [
    "CoverJob",
    "JOB_KINDS",
    "JobEngine",
    "JobStore",
    "STATES",
    "TRANSITIONS",
    "build_manifest",
    "canonical_json",
    "clip_to_wav_bytes",
    "derive_seed",
    "new_job_id",
    "validate_manifest",
    "wav_bytes_to_clip",
]
