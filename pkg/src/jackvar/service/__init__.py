"""HTTP service wrapping the estimation and experiment engines."""

from .app import create_app

__all__ = ["create_app"]
