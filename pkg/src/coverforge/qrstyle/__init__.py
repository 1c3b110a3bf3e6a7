"""QR encoding, stylized blending, and decode validation."""

from .encode import EC_LEVELS, QrMatrix, byte_capacity, encode_qr, smallest_version
from .render import qr_edge_map, qr_to_rgb, render_qr
from .stylize import (
    QrStyleRequest,
    QrStyleResult,
    auto_tune_scan,
    edge_density_warning,
    stylize_qr,
    validate_scan,
)

__all__ = [
    "EC_LEVELS",
    "QrMatrix",
    "QrStyleRequest",
    "QrStyleResult",
    "auto_tune_scan",
    "byte_capacity",
    "edge_density_warning",
    "encode_qr",
    "qr_edge_map",
    "qr_to_rgb",
    "render_qr",
    "smallest_version",
    "stylize_qr",
    "validate_scan",
]
