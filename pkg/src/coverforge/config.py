"""Pipeline-wide constants and service configuration.

Values here are the single source of truth for defaults; provenance records
and manifests echo them so runs stay reproducible across releases.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

# --- media ingest ---
INTERNAL_SAMPLE_RATE = 16_000      # Hz, mono
MIN_AUDIO_DURATION_S = 1.0
WINDOW_SECONDS = 10.0
MIN_REMAINDER_SECONDS = 2.0        # shorter trailing windows merge backwards
CANVAS_SIZE = 512                  # square canvas, center-crop then resample
MIN_IMAGE_DIM = 64

# --- captioning ---
CAPTION_FILTER_THRESHOLD = 0.5
CAPTION_CANDIDATES = 4
SUMMARY_MAX_WORDS = 60
PARTIAL_FAILURE_TOLERANCE = 0.5    # proceed when >= half the windows captioned
PROMPT_CHAR_LIMIT = 1600
PROMPT_TEMPLATE_ID = "default"

# --- generation defaults (recorded in provenance) ---
DEFAULT_GUIDANCE_SCALE = 7.5
DEFAULT_CONDITIONING_SCALE = 1.5
DEFAULT_STRENGTH = 0.9
DEFAULT_STEPS = 30
CONDITIONING_SCALE_RANGE = (0.0, 5.0)
STRENGTH_RANGE = (0.0, 1.0)
GENERATION_TIMEOUT_S = 300.0

# --- canny defaults ---
CANNY_SIGMA = 1.4
CANNY_KERNEL = 5
CANNY_LOW = 50.0
CANNY_HIGH = 150.0
EDGE_DENSITY_WARN_THRESHOLD = 0.25  # QR base images busier than this get a warning

# --- segmentation stub ---
SEGMENT_CLUSTERS = 4
SEGMENT_SEED = 1234

# --- toy LoRA fit harness ---
TOYFIT_LR_LORA = 0.12
TOYFIT_LR_FULL = 0.5
TOYFIT_BATCH = 256
TOYFIT_LOSS_FLOOR = 1e-8

# --- qr ---
QR_QUIET_ZONE = 4                  # modules on each side
QR_AUTOTUNE_ATTEMPTS = 5

# --- orchestrator / service ---
QUEUE_BOUND = 32
WORKER_COUNT = 1
MAX_AUDIO_UPLOAD = 30 * 1024 * 1024
MAX_IMAGE_UPLOAD = 10 * 1024 * 1024
MANIFEST_SCHEMA_VERSION = 1

ENV_BACKEND_URL = "COVERFORGE_BACKEND_URL"
ENV_DATA_DIR = "COVERFORGE_DATA_DIR"
ENV_PORT = "COVERFORGE_PORT"


@dataclass
class ServiceConfig:
    """Runtime configuration for the HTTP service and CLI."""

    listen_port: int = 8000
    data_dir: Path = field(default_factory=lambda: Path("./coverforge-data"))
    backend_mode: str = "stub"               # "stub" | "remote"
    backend_url: str | None = None
    public_base_url: str | None = None
    worker_count: int = WORKER_COUNT
    queue_bound: int = QUEUE_BOUND
    cors_origins: list[str] = field(default_factory=lambda: ["*"])

    def __post_init__(self):
        self.data_dir = Path(self.data_dir)
        if self.backend_mode not in ("stub", "remote"):
            raise ValueError(f"backend_mode must be stub|remote, got {self.backend_mode!r}")
        if self.backend_mode == "remote" and not self.backend_url:
            raise ValueError("backend_mode=remote requires backend_url")
        if self.worker_count < 1:
            raise ValueError("worker_count must be >= 1")


def load_config(path: str | Path | None = None, env: dict | None = None) -> ServiceConfig:
    """Build a ServiceConfig from an optional flat key=value file plus env overrides.

    File format: one ``key = value`` per line, ``#`` comments. Environment
    variables COVERFORGE_BACKEND_URL / COVERFORGE_DATA_DIR / COVERFORGE_PORT
    override the file.
    """
    env = os.environ if env is None else env
    raw: dict[str, str] = {}
    if path is not None:
        for line in Path(path).read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"bad config line (expected key = value): {line!r}")
            key, value = line.split("=", 1)
            raw[key.strip()] = value.strip()

    kwargs: dict = {}
    if "listen_port" in raw:
        kwargs["listen_port"] = int(raw["listen_port"])
    if "data_dir" in raw:
        kwargs["data_dir"] = Path(raw["data_dir"])
    if "backend_mode" in raw:
        kwargs["backend_mode"] = raw["backend_mode"]
    if "backend_url" in raw:
        kwargs["backend_url"] = raw["backend_url"]
    if "public_base_url" in raw:
        kwargs["public_base_url"] = raw["public_base_url"]
    if "worker_count" in raw:
        kwargs["worker_count"] = int(raw["worker_count"])
    if "queue_bound" in raw:
        kwargs["queue_bound"] = int(raw["queue_bound"])
    if "cors_origins" in raw:
        kwargs["cors_origins"] = [o.strip() for o in raw["cors_origins"].split(",") if o.strip()]

    if env.get(ENV_BACKEND_URL):
        kwargs["backend_url"] = env[ENV_BACKEND_URL]
        kwargs.setdefault("backend_mode", "remote")
    if env.get(ENV_DATA_DIR):
        kwargs["data_dir"] = Path(env[ENV_DATA_DIR])
    if env.get(ENV_PORT):
        kwargs["listen_port"] = int(env[ENV_PORT])

    return ServiceConfig(**kwargs)
