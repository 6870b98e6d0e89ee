"""HTTP service wrapping the simulator: run experiments, compare, plot."""

from .app import create_app

__all__ = ["create_app"]
