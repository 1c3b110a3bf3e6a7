"""coverforge: album cover and stylized QR generation pipeline."""

__version__ = "0.1.0"
