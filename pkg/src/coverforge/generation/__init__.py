"""Conditioned album-cover generation behind pluggable ports."""

from __future__ import annotations

from ..errors import BackendUnavailable
from .remote import RemoteEndpoint, RemoteGenerator, pack_to_wire, remote_generate
from .stub import StubGenerator, stub_generate
from .types import (
    ConditioningPack,
    GeneratedImage,
    GenerationParams,
    GeneratorPort,
    build_provenance,
)


def generate_cover(pack: ConditioningPack, backend: GeneratorPort) -> GeneratedImage:
    """Run one generation with total param validation and one availability retry."""
    pack.params.validate()
    try:
        return backend.generate(pack)
    except BackendUnavailable:
        return backend.generate(pack)


__all__ = [
    "ConditioningPack",
    "GeneratedImage",
    "GenerationParams",
    "GeneratorPort",
    "RemoteEndpoint",
    "RemoteGenerator",
    "StubGenerator",
    "build_provenance",
    "generate_cover",
    "pack_to_wire",
    "remote_generate",
    "stub_generate",
]
