"""Shared fixtures: deterministic assets, stub backends, engine factories."""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

ASSETS = Path(__file__).parent / "assets"
sys.path.insert(0, str(ASSETS))

import make_fixtures  # noqa: E402

REQUIRED_ASSETS = [
    "fruit_bowl.png", "half_blue_red.png", "const_gray.png", "square_64.png",
    "song_60s.wav", "song_3s.wav",
]


def pytest_configure(config):
    if not all((ASSETS / name).exists() for name in REQUIRED_ASSETS):
        make_fixtures.main()


@pytest.fixture(scope="session")
def assets_dir() -> Path:
    return ASSETS


@pytest.fixture(scope="session")
def song_60s_bytes(assets_dir) -> bytes:
    return (assets_dir / "song_60s.wav").read_bytes()


@pytest.fixture(scope="session")
def song_3s_bytes(assets_dir) -> bytes:
    return (assets_dir / "song_3s.wav").read_bytes()


@pytest.fixture(scope="session")
def fruit_png(assets_dir) -> bytes:
    return (assets_dir / "fruit_bowl.png").read_bytes()


@pytest.fixture(scope="session")
def song_60s_clip(song_60s_bytes):
    from coverforge.ingest import decode_audio

    return decode_audio(song_60s_bytes, "wav")


@pytest.fixture(scope="session")
def song_3s_clip(song_3s_bytes):
    from coverforge.ingest import decode_audio

    return decode_audio(song_3s_bytes, "wav")


@pytest.fixture(scope="session")
def fruit_image(fruit_png):
    from coverforge.ingest import normalize_image

    return normalize_image(fruit_png)


@pytest.fixture(scope="session")
def fixture_bundle(song_60s_clip, fruit_image):
    from coverforge.ingest import ModalityBundle

    return ModalityBundle(audio=song_60s_clip, image=fruit_image,
                          style_text="realistic, 8K")


@pytest.fixture()
def engine_factory(tmp_path):
    """Build stub-backed engines over throwaway stores."""
    from coverforge.captioning import StubCaptioner
    from coverforge.generation import StubGenerator
    from coverforge.orchestrator import JobEngine, JobStore
    from coverforge.vision import KMeansStubSegmenter

    counter = [0]

    def build(captioner=None, generator=None, queue_bound=32, canvas=512,
              data_dir=None):
        counter[0] += 1
        store = JobStore(data_dir or tmp_path / f"store{counter[0]}")
        return JobEngine(store,
                         captioner or StubCaptioner(),
                         generator or StubGenerator(),
                         KMeansStubSegmenter(),
                         queue_bound=queue_bound, canvas=canvas)

    return build


def make_wav_bytes(samples: np.ndarray, sample_rate: int = 16_000,
                   channels: int = 1) -> bytes:
    """Synthesize 16-bit PCM wav bytes for ad-hoc decode tests."""
    import io
    import wave

    pcm = (np.asarray(samples) * 32767.0).astype(np.int16)
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(channels)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate)
        wf.writeframes(pcm.tobytes())
    return buf.getvalue()


def make_silent_mp3(n_frames: int = 40) -> bytes:
    """Valid MPEG-1 Layer III mono frames (44.1 kHz, 128 kbps) of silence."""
    header = bytes([0xFF, 0xFB, 0x90, 0xC0])
    frame = header + bytes(417 - 4)
    return frame * n_frames


def make_png_bytes(pixels: np.ndarray) -> bytes:
    import io

    from PIL import Image

    buf = io.BytesIO()
    Image.fromarray(pixels.astype(np.uint8), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()
