"""Content-addressed artifact store plus the per-job state files.

Layout: {data_dir}/blobs/{sha256} for content, {data_dir}/jobs/{id}/job.json
for state, {data_dir}/jobs/{id}/manifest.json on success, and an
append-only {data_dir}/jobs/index.jsonl for ordering. State transitions are
compare-and-set under a process-wide lock; every write is atomic
(temp file + rename).
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
import threading
import time
from pathlib import Path

from ..errors import NotFound, TransitionError
from .job import TRANSITIONS, CoverJob


def _atomic_write(path: Path, data: bytes):
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def canonical_json(obj) -> bytes:
    return (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode("utf-8")


class JobStore:
    def __init__(self, data_dir: str | Path):
        self.root = Path(data_dir)
        self.blob_dir = self.root / "blobs"
        self.jobs_dir = self.root / "jobs"
        self.blob_dir.mkdir(parents=True, exist_ok=True)
        self.jobs_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()

    # --- blobs ---

    def put_blob(self, data: bytes) -> str:
        digest = hashlib.sha256(data).hexdigest()
        path = self.blob_dir / digest
        if not path.exists():
            _atomic_write(path, data)
        return digest

    def get_blob(self, digest: str) -> bytes:
        path = self.blob_dir / digest
        if not path.exists():
            raise NotFound(f"blob {digest} not found")
        return path.read_bytes()

    def blob_path(self, digest: str) -> Path:
        return self.blob_dir / digest

    # --- jobs ---

    def _job_path(self, job_id: str) -> Path:
        return self.jobs_dir / job_id / "job.json"

    def create_job(self, job: CoverJob):
        with self._lock:
            job_dir = self.jobs_dir / job.id
            job_dir.mkdir(parents=True, exist_ok=True)
            _atomic_write(self._job_path(job.id), canonical_json(job.to_dict()))
            with open(self.jobs_dir / "index.jsonl", "a", encoding="utf-8") as fh:
                fh.write(json.dumps({"id": job.id, "created_at": job.created_at}) + "\n")

    def get_job(self, job_id: str) -> CoverJob:
        path = self._job_path(job_id)
        if not path.exists():
            raise NotFound(f"job {job_id} not found")
        return CoverJob.from_dict(json.loads(path.read_text()))

    def save_job(self, job: CoverJob):
        """Persist non-state fields; state changes must go through transition()."""
        with self._lock:
            current = self.get_job(job.id)
            if current.state != job.state:
                raise TransitionError(
                    f"save_job cannot change state ({current.state} -> {job.state})")
            _atomic_write(self._job_path(job.id), canonical_json(job.to_dict()))

    def transition(self, job_id: str, to_state: str, *, expect_from: set[str] | None = None,
                   mutate=None) -> CoverJob:
        """Compare-and-set state change; rejects anything outside the legal map."""
        with self._lock:
            job = self.get_job(job_id)
            legal = TRANSITIONS.get(job.state, set())
            if to_state not in legal:
                raise TransitionError(f"illegal transition {job.state} -> {to_state} "
                                      f"for job {job_id}")
            if expect_from is not None and job.state not in expect_from:
                raise TransitionError(f"job {job_id} is {job.state}, expected one of "
                                      f"{sorted(expect_from)}")
            job.state = to_state
            if mutate is not None:
                mutate(job)
            try:
                job = CoverJob.from_dict(job.to_dict())   # reject invalid records
            except ValueError as exc:
                raise TransitionError(f"transition {to_state} produces invalid "
                                      f"record: {exc}") from exc
            _atomic_write(self._job_path(job.id), canonical_json(job.to_dict()))
            return job

    def request_cancel(self, job_id: str) -> CoverJob:
        with self._lock:
            job = self.get_job(job_id)
            job.cancel_requested = True
            _atomic_write(self._job_path(job.id), canonical_json(job.to_dict()))
            return job

    def list_jobs(self, states: set[str] | None = None, limit: int = 50) -> list[CoverJob]:
        index = self.jobs_dir / "index.jsonl"
        if not index.exists():
            return []
        ids = [json.loads(line)["id"] for line in index.read_text().splitlines() if line]
        out: list[CoverJob] = []
        for job_id in reversed(ids):          # newest first
            try:
                job = self.get_job(job_id)
            except NotFound:
                continue
            if states is None or job.state in states:
                out.append(job)
            if len(out) >= limit:
                break
        return out

    def count_pending(self) -> int:
        return len(self.list_jobs(states={"queued"}, limit=10 ** 6))

    def recover_incomplete(self) -> list[str]:
        """Re-queue jobs stranded in running state by a crashed worker.

        Stages are idempotent against content-addressed inputs, so a re-run
        reproduces identical artifacts.
        """
        requeued = []
        with self._lock:
            for job in self.list_jobs(states={"running"}, limit=10 ** 6):
                job.state = "queued"
                job.timings = {}
                job.artifacts = {}
                _atomic_write(self._job_path(job.id), canonical_json(job.to_dict()))
                requeued.append(job.id)
        return requeued

    # --- manifests ---

    def manifest_path(self, job_id: str) -> Path:
        return self.jobs_dir / job_id / "manifest.json"

    def write_manifest(self, job_id: str, manifest: dict) -> bytes:
        data = canonical_json(manifest)
        _atomic_write(self.manifest_path(job_id), data)
        return data

    def read_manifest(self, job_id: str) -> dict:
        path = self.manifest_path(job_id)
        if not path.exists():
            raise NotFound(f"manifest for job {job_id} not found")
        return json.loads(path.read_text())

    def canonical_manifest_bytes(self, job_id: str) -> bytes:
        path = self.manifest_path(job_id)
        if not path.exists():
            raise NotFound(f"manifest for job {job_id} not found")
        return path.read_bytes()

    def verify_artifacts(self, job_id: str) -> bool:
        """Recompute content hashes for every artifact listed in the manifest."""
        manifest = self.read_manifest(job_id)
        for entry in manifest["artifacts"]:
            if entry["name"] == "manifest.json":
                continue
            data = self.get_blob(entry["hash"])
            if hashlib.sha256(data).hexdigest() != entry["hash"]:
                return False
            if len(data) != entry["size"]:
                return False
        return True


def now_ms() -> float:
    return time.time() * 1000.0
