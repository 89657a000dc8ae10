"""Vision-language embedding backends behind one behavioral contract."""

from .base import BackendDescriptor, EmbeddingBackend
from .synthetic import SyntheticBackend
from .remote import RemoteBackend

__all__ = [
    "BackendDescriptor",
    "EmbeddingBackend",
    "SyntheticBackend",
    "RemoteBackend",
    "load_graph_backend",
]


def load_graph_backend(manifest_path):
    """Load the exported-graph backend; imports torch lazily."""
    from .graph import GraphBackend
    return GraphBackend(manifest_path)
