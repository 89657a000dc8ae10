import io

import numpy as np
import pytest
from PIL import Image

from ccmtune import RgbImage, SyntheticBackend


def png_bytes(pixels, mode="RGB"):
    """Encode a nested list of 8-bit pixel tuples as PNG bytes."""
    arr = np.asarray(pixels, dtype=np.uint8)
    img = Image.fromarray(arr, mode=mode)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def random_image(rng, width, height, lo=0.0, hi=1.0):
    return RgbImage(rng.uniform(lo, hi, (3, height, width)))


def gray_world_image(rng, side=64, gray_frac=0.55, color=(0.5, 0.85, 0.15)):
    """Mostly mid-gray image with one strongly colored region and mild texture.

    The colored region gives the channel means enough spread for the color
    matrix to act on; the texture keeps the colorfulness terms smooth.
    """
    img = np.full((3, side, side), 0.5)
    img += rng.normal(0.0, 0.02, size=img.shape)
    rows = int(side * (1.0 - gray_frac))
    for c in range(3):
        img[c, :rows, :] = color[c] + rng.normal(0.0, 0.04, size=(rows, side))
    return RgbImage(np.clip(img, 0.0, 1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def synthetic_backend():
    return SyntheticBackend()


@pytest.fixture
def small_backend():
    """Synthetic backend with a small input size to keep loops fast."""
    return SyntheticBackend(input_size=32)
