"""Deterministic fixture corpus generator.

Run from the repo root: python tests/assets/make_fixtures.py
Regenerates identical bytes on every run; the stub captioner's lookup table
is keyed on the pixel hash of fruit_bowl.png, so do not edit images by hand.
"""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

ASSETS = Path(__file__).parent
SAMPLE_RATE = 16_000


def fruit_bowl() -> np.ndarray:
    """512x512 still life: colored circles on a table band."""
    img = Image.new("RGB", (512, 512), (238, 232, 213))
    draw = ImageDraw.Draw(img)
    draw.rectangle([0, 320, 512, 512], fill=(133, 94, 66))          # table
    draw.ellipse([96, 260, 416, 400], fill=(90, 62, 47))            # bowl
    fruits = [
        ((160, 250, 240, 330), (196, 30, 58)),                      # apple
        ((230, 230, 310, 310), (255, 145, 0)),                      # orange
        ((300, 255, 380, 335), (240, 225, 48)),                     # lemon
        ((200, 200, 268, 268), (106, 168, 79)),                     # lime
    ]
    for box, color in fruits:
        draw.ellipse(box, fill=color)
    return np.asarray(img, dtype=np.uint8)


def half_blue_red() -> np.ndarray:
    """Left half pure blue, right half pure red; exact 2-color fixture."""
    px = np.zeros((512, 512, 3), dtype=np.uint8)
    px[:, :256] = (0, 0, 255)
    px[:, 256:] = (255, 0, 0)
    return px


def const_gray() -> np.ndarray:
    return np.full((512, 512, 3), 128, dtype=np.uint8)


def white_square_on_black(size: int = 64, square: int = 32) -> np.ndarray:
    px = np.zeros((size, size, 3), dtype=np.uint8)
    lo = (size - square) // 2
    px[lo:lo + square, lo:lo + square] = 255
    return px


def song_samples(duration_s: float, seed: int = 2024) -> np.ndarray:
    """Synthetic 'song': chord of sines with a slow envelope, int16-exact."""
    n = int(round(duration_s * SAMPLE_RATE))
    t = np.arange(n, dtype=np.float64) / SAMPLE_RATE
    rng = np.random.default_rng(seed)
    freqs = rng.uniform(110.0, 880.0, size=5)
    amps = rng.uniform(0.05, 0.18, size=5)
    wave_f = sum(a * np.sin(2 * np.pi * f * t) for f, a in zip(freqs, amps))
    envelope = 0.6 + 0.4 * np.sin(2 * np.pi * t / max(duration_s, 1.0))
    return np.clip(wave_f * envelope, -0.99, 0.99)


def write_wav(path: Path, samples: np.ndarray, sample_rate: int = SAMPLE_RATE):
    pcm = (samples * 32767.0).astype(np.int16)
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(sample_rate)
        wf.writeframes(pcm.tobytes())


def write_png(path: Path, pixels: np.ndarray):
    Image.fromarray(pixels, mode="RGB").save(path, format="PNG")


def main():
    write_png(ASSETS / "fruit_bowl.png", fruit_bowl())
    write_png(ASSETS / "half_blue_red.png", half_blue_red())
    write_png(ASSETS / "const_gray.png", const_gray())
    write_png(ASSETS / "square_64.png", white_square_on_black())
    write_wav(ASSETS / "song_60s.wav", song_samples(60.0))
    write_wav(ASSETS / "song_3s.wav", song_samples(3.0))

    import hashlib
    digest = hashlib.sha256(fruit_bowl().tobytes()).hexdigest()
    print("fruit_bowl pixel hash:", digest)


if __name__ == "__main__":
    main()
