"""HTTP facade, CLI plumbing, and the mock remote runtime."""

from .app import build_app, build_engine
from .mock_runtime import MockRuntimeServer, build_mock_app, serve_mock

__all__ = ["MockRuntimeServer", "build_app", "build_engine", "build_mock_app", "serve_mock"]
