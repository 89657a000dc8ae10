"""Embedding sidecar speaking the ccmtune wire protocol."""

from .app import create_app
from .models import TinyClipAdapter, TransformersClipAdapter, adapter_from_env

__all__ = ["create_app", "TinyClipAdapter", "TransformersClipAdapter", "adapter_from_env"]
