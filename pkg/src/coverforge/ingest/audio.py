"""Audio decoding, normalization, and fixed-length windowing.

Everything downstream consumes mono float samples in [-1, 1] at the internal
16 kHz rate; window boundaries are computed in whole samples so the windows
partition the clip exactly.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly

from ..config import (
    INTERNAL_SAMPLE_RATE,
    MIN_AUDIO_DURATION_S,
    MIN_REMAINDER_SECONDS,
    WINDOW_SECONDS,
)
from ..errors import CorruptAudio, EmptyAudio, UnsupportedFormat
from . import _mpg123

AUDIO_FORMATS = ("mp3", "wav")


@dataclass
class AudioClip:
    """Mono clip at a known sample rate; samples are float in [-1, 1]."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.samples.ndim != 1:
            raise ValueError("AudioClip samples must be 1-D mono")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("AudioClip samples must be finite")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass
class AudioWindow:
    """Contiguous slice of a parent clip, bounds in seconds."""

    start_s: float
    end_s: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not (0 <= self.start_s < self.end_s):
            raise ValueError(f"bad window bounds [{self.start_s}, {self.end_s})")

    @property
    def span(self) -> tuple[float, float]:
        return (self.start_s, self.end_s)


_PCM_SCALE = {
    np.dtype(np.uint8): (128.0, 128.0),          # offset, divisor
    np.dtype(np.int16): (0.0, 32768.0),
    np.dtype(np.int32): (0.0, float(1 << 31)),
}


def _decode_wav(raw: bytes) -> tuple[np.ndarray, int]:
    # scipy handles PCM 8/16/24/32 and IEEE float variants
    try:
        rate, data = wavfile.read(io.BytesIO(raw))
    except Exception as exc:
        raise CorruptAudio(f"wav decode failed: {exc}") from exc

    if data.dtype in _PCM_SCALE:
        offset, divisor = _PCM_SCALE[data.dtype]
        data = (data.astype(np.float64) - offset) / divisor
    elif data.dtype in (np.float32, np.float64):
        data = data.astype(np.float64)
    else:
        raise CorruptAudio(f"unsupported wav sample format {data.dtype}")

    if data.ndim == 2:
        data = data.mean(axis=1)
    return data, int(rate)


def _decode_mp3(raw: bytes) -> tuple[np.ndarray, int]:
    try:
        pcm, rate, channels = _mpg123.decode(raw)
    except _mpg123.Mpg123Unavailable as exc:
        raise UnsupportedFormat(f"mp3 decoding unavailable: {exc}") from exc
    except ValueError as exc:
        raise CorruptAudio(f"mp3 decode failed: {exc}") from exc
    data = np.frombuffer(pcm, dtype="<i2").astype(np.float64) / 32768.0
    if channels > 1:
        data = data.reshape(-1, channels).mean(axis=1)
    return data, rate


def decode_audio(raw_bytes: bytes, declared_format: str,
                 target_rate: int = INTERNAL_SAMPLE_RATE) -> AudioClip:
    """Decode raw upload bytes into a mono AudioClip at the internal rate.

    Stereo sources are averaged to mono; clips shorter than 1 s are rejected.
    """
    if not raw_bytes:
        raise CorruptAudio("empty audio payload")
    fmt = declared_format.lower().lstrip(".")
    if fmt == "wav":
        data, rate = _decode_wav(raw_bytes)
    elif fmt == "mp3":
        data, rate = _decode_mp3(raw_bytes)
    else:
        raise UnsupportedFormat(f"unsupported audio format {declared_format!r}; "
                                f"accepted: {', '.join(AUDIO_FORMATS)}")

    if len(data) == 0:
        raise CorruptAudio("decoded zero samples")
    if rate != target_rate:
        data = resample_poly(data, target_rate, rate)
    data = np.clip(data, -1.0, 1.0)
    clip = AudioClip(samples=data, sample_rate=target_rate)
    if clip.duration_s < MIN_AUDIO_DURATION_S:
        raise EmptyAudio(f"clip is {clip.duration_s:.2f}s; minimum is {MIN_AUDIO_DURATION_S}s")
    return clip


def window_audio(clip: AudioClip, window_s: float = WINDOW_SECONDS) -> list[AudioWindow]:
    """Split a clip into contiguous windows of ``window_s`` seconds.

    Windows partition [0, duration] exactly. A trailing remainder shorter
    than MIN_REMAINDER_SECONDS merges into the previous window, so the final
    window may be up to ``window_s + 2`` seconds long.
    """
    if window_s <= 0:
        raise ValueError("window_s must be positive")
    sr = clip.sample_rate
    n = len(clip.samples)
    step = int(round(window_s * sr))
    if step <= 0:
        raise ValueError("window_s too small for the sample rate")

    bounds = list(range(0, n, step))
    bounds.append(n)
    if bounds[-1] == bounds[-2]:
        bounds.pop()
    # merge a sub-threshold trailing remainder into the previous window
    min_rem = int(round(MIN_REMAINDER_SECONDS * sr))
    if len(bounds) >= 3 and (bounds[-1] - bounds[-2]) < min_rem:
        del bounds[-2]

    windows = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        windows.append(AudioWindow(start_s=lo / sr, end_s=hi / sr,
                                   samples=clip.samples[lo:hi]))
    return windows
