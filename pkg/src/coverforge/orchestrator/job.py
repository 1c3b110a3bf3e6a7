"""Job records and manifest schema for the pipeline state machine."""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from typing import Any

from ..config import MANIFEST_SCHEMA_VERSION
from ..generation.types import GenerationParams

STATES = ("queued", "running", "succeeded", "failed", "canceled")

# legal transitions; running->queued additionally happens via crash recovery
TRANSITIONS: dict[str, set[str]] = {
    "queued": {"running", "canceled"},
    "running": {"succeeded", "failed", "canceled"},
    "succeeded": set(),
    "failed": set(),
    "canceled": set(),
}

JOB_KINDS = ("cover", "qr")


def new_job_id() -> str:
    return str(uuid.uuid4())


@dataclass
class CoverJob:
    """Persistent job record; everything JSON-serializable."""

    id: str
    state: str
    kind: str
    seed: int
    params: GenerationParams
    bundle_refs: dict[str, str]
    options: dict[str, Any] = field(default_factory=dict)
    artifacts: dict[str, str] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    error: dict[str, str] | None = None
    caption_set: dict | None = None
    created_at: float = 0.0
    cancel_requested: bool = False

    def __post_init__(self):
        if self.state not in STATES:
            raise ValueError(f"unknown state {self.state!r}")
        if self.kind not in JOB_KINDS:
            raise ValueError(f"unknown job kind {self.kind!r}")
        if self.state == "succeeded":
            missing = {"cover.png", "manifest.json"} - set(self.artifacts)
            if missing:
                raise ValueError(f"succeeded job missing artifacts: {sorted(missing)}")
        if self.state == "failed" and self.error is None:
            raise ValueError("failed job must carry an error")

    def to_dict(self) -> dict:
        return {
            "schema_version": MANIFEST_SCHEMA_VERSION,
            "id": self.id,
            "state": self.state,
            "kind": self.kind,
            "seed": self.seed,
            "params": self.params.to_dict(),
            "bundle_refs": self.bundle_refs,
            "options": self.options,
            "artifacts": self.artifacts,
            "timings": self.timings,
            "warnings": self.warnings,
            "error": self.error,
            "caption_set": self.caption_set,
            "created_at": self.created_at,
            "cancel_requested": self.cancel_requested,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CoverJob":
        return cls(
            id=data["id"],
            state=data["state"],
            kind=data["kind"],
            seed=data["seed"],
            params=GenerationParams.from_dict(data["params"]),
            bundle_refs=data["bundle_refs"],
            options=data.get("options", {}),
            artifacts=data.get("artifacts", {}),
            timings=data.get("timings", {}),
            warnings=data.get("warnings", []),
            error=data.get("error"),
            caption_set=data.get("caption_set"),
            created_at=data.get("created_at", 0.0),
            cancel_requested=data.get("cancel_requested", False),
        )


def build_manifest(job: CoverJob, prompt: str, backend_identities: dict[str, str],
                   artifact_entries: list[dict], qr_section: dict | None = None) -> dict:
    """Manifest schema v1; round-trips losslessly through JSON."""
    return {
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "job_id": job.id,
        "kind": job.kind,
        "input_hashes": dict(job.bundle_refs),
        "backend_identities": backend_identities,
        "prompt": prompt,
        "seed": job.seed,
        "params": job.params.to_dict(),
        "artifacts": artifact_entries,
        "timings": job.timings,
        "warnings": job.warnings,
        "qr": qr_section,
    }


MANIFEST_REQUIRED_KEYS = (
    "schema_version", "job_id", "kind", "input_hashes", "backend_identities",
    "prompt", "seed", "params", "artifacts", "timings", "warnings", "qr",
)


def validate_manifest(manifest: dict):
    """Structural schema check used by tests and the artifact verifier."""
    for key in MANIFEST_REQUIRED_KEYS:
        if key not in manifest:
            raise ValueError(f"manifest missing key {key!r}")
    if manifest["schema_version"] != MANIFEST_SCHEMA_VERSION:
        raise ValueError(f"unsupported manifest schema {manifest['schema_version']}")
    for entry in manifest["artifacts"]:
        for key in ("name", "hash", "size", "content_type"):
            if key not in entry:
                raise ValueError(f"artifact entry missing {key!r}: {entry}")
