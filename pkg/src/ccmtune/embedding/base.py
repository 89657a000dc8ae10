"""The behavioral contract every embedding backend satisfies.

A backend receives geometry-preprocessed but UN-normalized [0, 1] images;
any per-model photometric normalization (mean/std) happens inside the
backend, and pullbacks are always with respect to the [0, 1] input.
"""

from __future__ import annotations

import base64
from abc import ABC, abstractmethod
from dataclasses import dataclass, asdict

import numpy as np

from ..errors import ShapeError
from ..image import RgbImage


@dataclass(frozen=True)
class BackendDescriptor:
    name: str
    architecture_id: str
    weights_id: str
    embed_dim: int
    input_size: int
    supports_pullback: bool

    def __post_init__(self):
        if self.embed_dim < 1:
            raise ValueError("embed_dim must be >= 1")
        if self.input_size < 1:
            raise ValueError("input_size must be >= 1")

    def as_dict(self) -> dict:
        return asdict(self)


class EmbeddingBackend(ABC):
    """Deterministic image/text embedder, optionally with input pullbacks."""

    @abstractmethod
    def descriptor(self) -> BackendDescriptor:
        ...

    @abstractmethod
    def embed_image(self, img: RgbImage) -> np.ndarray:
        """Embed a square image of side descriptor().input_size."""

    @abstractmethod
    def embed_text(self, prompt: str) -> np.ndarray:
        ...

    def image_pullback(self, img: RgbImage, cotangent: np.ndarray) -> RgbImage:
        """Gradient of <cotangent, embed_image(img)> w.r.t. the [0,1] input."""
        from ..errors import PullbackUnsupportedError
        raise PullbackUnsupportedError(
            f"backend {self.descriptor().name!r} is forward-only")

    def check_image(self, img: RgbImage):
        size = self.descriptor().input_size
        if img.width != size or img.height != size:
            raise ShapeError(
                f"expected {size}x{size} input, got {img.width}x{img.height}")


# --- wire encoding shared by the remote client and conformance tests ------

def image_to_wire(samples: np.ndarray) -> dict:
    """Encode a (3, H, W) array as the protocol's little-endian float32 b64."""
    arr = np.ascontiguousarray(samples, dtype="<f4")
    return {
        "width": int(samples.shape[2]),
        "height": int(samples.shape[1]),
        "data_b64": base64.b64encode(arr.tobytes()).decode("ascii"),
    }


def image_from_wire(doc: dict) -> np.ndarray:
    width = int(doc["width"])
    height = int(doc["height"])
    raw = base64.b64decode(doc["data_b64"])
    expected = 3 * height * width * 4
    if len(raw) != expected:
        raise ShapeError(
            f"payload is {len(raw)} bytes, expected {expected} for "
            f"3x{height}x{width} float32")
    arr = np.frombuffer(raw, dtype="<f4").astype(np.float64)
    return arr.reshape(3, height, width)
