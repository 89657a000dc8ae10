"""Analytic stand-in backend built from color statistics.

Its 8-dimensional "embedding" is an L2-normalized feature vector of the
[0, 1] image:

    [mu_R - 0.5, mu_G - 0.5, mu_B - 0.5, C/100, mu_R - mu_B, sigma_luma, 0.1, 0]

where C is the colorfulness statistic on the 0-255 scale and
luma = (R + G + B) / 3. Known style keywords map to fixed anchor directions
on those axes, so a prompt like "warm" rewards exactly the statistic it
names and the whole tuning loop closes without any neural model. Gradients
are exact, so the backend also exercises the analytic optimization path.
"""

from __future__ import annotations

import hashlib

import numpy as np

from ..image import RgbImage
from ..metrics import colorfulness_of_samples, colorfulness_with_grad
from .base import BackendDescriptor, EmbeddingBackend

EMBED_DIM = 8
INPUT_SIZE = 224

# Anchor directions before normalization; matching is first-hit in this order.
_ANCHORS = (
    ("warm", {4: 1.0}),
    ("cool", {4: -1.0}),
    ("vibrant", {3: 1.0}),
    ("dull", {3: -1.0}),
    ("bright", {0: 1.0 / np.sqrt(3.0), 1: 1.0 / np.sqrt(3.0), 2: 1.0 / np.sqrt(3.0)}),
    ("dark", {0: -1.0 / np.sqrt(3.0), 1: -1.0 / np.sqrt(3.0), 2: -1.0 / np.sqrt(3.0)}),
)
_ANCHOR_CONSTANT_DIM = 6
_ANCHOR_CONSTANT = 0.1
_HASH_SEED = b"ccmtune-synthetic-text-v1:"


def raw_image_features(samples: np.ndarray) -> np.ndarray:
    """The un-normalized feature vector of a (3, H, W) [0,1]-scale array."""
    r, g, b = samples[0], samples[1], samples[2]
    c = colorfulness_of_samples(samples)
    luma = (r + g + b) / 3.0
    return np.array([
        np.mean(r) - 0.5,
        np.mean(g) - 0.5,
        np.mean(b) - 0.5,
        c / 100.0,
        np.mean(r) - np.mean(b),
        np.std(luma),
        _ANCHOR_CONSTANT,
        0.0,
    ])


class SyntheticBackend(EmbeddingBackend):

    def __init__(self, input_size: int = INPUT_SIZE):
        self._descriptor = BackendDescriptor(
            name="synthetic",
            architecture_id="color-stats-v1",
            weights_id="analytic",
            embed_dim=EMBED_DIM,
            input_size=input_size,
            supports_pullback=True,
        )
        self._text_cache: dict[str, np.ndarray] = {}

    def descriptor(self) -> BackendDescriptor:
        return self._descriptor

    def embed_image(self, img: RgbImage) -> np.ndarray:
        self.check_image(img)
        e = raw_image_features(img.samples)
        return e / np.linalg.norm(e)

    def embed_text(self, prompt: str) -> np.ndarray:
        cached = self._text_cache.get(prompt)
        if cached is None:
            cached = self._embed_text_uncached(prompt)
            self._text_cache[prompt] = cached
        return cached.copy()

    def _embed_text_uncached(self, prompt: str) -> np.ndarray:
        lowered = prompt.lower()
        for keyword, axes in _ANCHORS:
            if keyword in lowered:
                e = np.zeros(EMBED_DIM)
                for dim, value in axes.items():
                    e[dim] = value
                e[_ANCHOR_CONSTANT_DIM] = _ANCHOR_CONSTANT
                return e / np.linalg.norm(e)
        # Unknown prompt: deterministic unit vector seeded by the text.
        digest = hashlib.sha256(_HASH_SEED + lowered.encode("utf-8")).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        e = rng.standard_normal(EMBED_DIM)
        while np.linalg.norm(e) == 0.0:  # pragma: no cover
            e = rng.standard_normal(EMBED_DIM)
        return e / np.linalg.norm(e)

    def image_pullback(self, img: RgbImage, cotangent: np.ndarray) -> RgbImage:
        self.check_image(img)
        cot = np.asarray(cotangent, dtype=np.float64)
        if cot.shape != (EMBED_DIM,):
            from ..errors import ShapeError
            raise ShapeError(f"cotangent must have shape ({EMBED_DIM},), got {cot.shape}")

        samples = img.samples
        c, dc = colorfulness_with_grad(samples)
        luma = samples.mean(axis=0)
        mu_luma = luma.mean()
        sigma_luma = np.sqrt(np.mean((luma - mu_luma) ** 2))
        mu = samples.mean(axis=(1, 2))
        e = np.array([mu[0] - 0.5, mu[1] - 0.5, mu[2] - 0.5, c / 100.0,
                      mu[0] - mu[2], sigma_luma, _ANCHOR_CONSTANT, 0.0])
        norm = np.linalg.norm(e)
        unit = e / norm
        # Cotangent through the L2 normalization, onto the raw features.
        c_raw = (cot - (cot @ unit) * unit) / norm

        n = samples.shape[1] * samples.shape[2]
        grad = np.zeros_like(samples)
        # Channel means (features 0..2).
        for ch in range(3):
            grad[ch] += c_raw[ch] / n
        # Colorfulness / 100.
        if c_raw[3] != 0.0:
            grad += (c_raw[3] / 100.0) * dc
        # Warmth mu_R - mu_B.
        grad[0] += c_raw[4] / n
        grad[2] -= c_raw[4] / n
        # Luma standard deviation.
        if c_raw[5] != 0.0 and sigma_luma > 0.0:
            d_luma = (luma - mu_luma) / (n * sigma_luma)
            grad += (c_raw[5] / 3.0) * d_luma[None, :, :]
        return RgbImage(grad)
