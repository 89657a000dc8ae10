"""Image representation, PNG/JPEG codec, and geometric preprocessing.

Images are planar float arrays of shape (3, H, W), channel order R, G, B,
nominally in [0, 1]. Values outside [0, 1] are legal everywhere except at
display encoding, which clamps. All geometry operations are linear maps on
pixel values, which is what lets the color matrix commute with them.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import CropError, DecodeError

# Pillow modes with 8-bit channels we know how to map exactly to [0, 1].
_EIGHT_BIT_MODES = {"RGB", "RGBA", "L", "LA", "P", "PA", "1"}


@dataclass(frozen=True)
class RgbImage:
    """Planar 3-channel float image; `samples` has shape (3, height, width)."""

    samples: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        if s.ndim != 3 or s.shape[0] != 3:
            raise ValueError(f"samples must have shape (3, H, W), got {s.shape}")
        if s.shape[1] < 1 or s.shape[2] < 1:
            raise ValueError("image must be at least 1x1")
        if not np.all(np.isfinite(s)):
            raise ValueError("image samples must be finite")
        object.__setattr__(self, "samples", np.ascontiguousarray(s))

    @property
    def width(self) -> int:
        return self.samples.shape[2]

    @property
    def height(self) -> int:
        return self.samples.shape[1]

    @classmethod
    def from_planes(cls, r, g, b) -> "RgbImage":
        return cls(np.stack([r, g, b], axis=0))

    @classmethod
    def constant(cls, value, width: int, height: int) -> "RgbImage":
        rgb = np.broadcast_to(np.asarray(value, dtype=np.float64).reshape(3, 1, 1),
                              (3, height, width))
        return cls(rgb.copy())


@dataclass(frozen=True)
class PreprocessSpec:
    """Geometry spec for encoder input: resize shorter side, center crop."""

    target_size: int = 224
    resize_filter: str = "bilinear"
    crop: str = "center"

    def __post_init__(self):
        if self.target_size < 1:
            raise ValueError("target_size must be >= 1")
        if self.resize_filter != "bilinear":
            raise ValueError(f"unsupported resize filter {self.resize_filter!r}")
        if self.crop != "center":
            raise ValueError(f"unsupported crop mode {self.crop!r}")


def decode_image(data: bytes) -> RgbImage:
    """Decode 8-bit PNG or JPEG bytes; v maps to v/255 exactly.

    Alpha is discarded, grayscale replicated to three channels.
    Raises DecodeError on malformed input or non-8-bit depth.
    """
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (UnidentifiedImageError, OSError, ValueError) as exc:
        raise DecodeError(f"cannot decode image: {exc}") from exc
    if img.mode not in _EIGHT_BIT_MODES:
        raise DecodeError(f"unsupported bit depth / mode {img.mode!r}")
    rgb = img.convert("RGB")
    arr = np.asarray(rgb, dtype=np.float64) / 255.0  # (H, W, 3)
    return RgbImage(np.moveaxis(arr, 2, 0))


def encode_display(img: RgbImage) -> bytes:
    """Clamp to [0, 1], quantize round(v*255) to 8 bits, PNG-encode."""
    clamped = np.clip(img.samples, 0.0, 1.0)
    quantized = np.floor(clamped * 255.0 + 0.5).astype(np.uint8)
    pil = Image.fromarray(np.moveaxis(quantized, 0, 2), mode="RGB")
    buf = io.BytesIO()
    pil.save(buf, format="PNG")
    return buf.getvalue()


def _resize_axis_coords(n_in: int, n_out: int):
    """Bilinear source coordinates per output index, half-pixel-center convention."""
    scale = n_in / n_out
    src = (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5
    src = np.clip(src, 0.0, n_in - 1.0)
    lo = np.floor(src).astype(np.intp)
    hi = np.minimum(lo + 1, n_in - 1)
    w_hi = src - lo
    return lo, hi, w_hi


def resize_bilinear(img: RgbImage, width: int, height: int) -> RgbImage:
    """Resize to an explicit size with separable 2-tap bilinear sampling.

    Output samples are convex combinations of input samples, so the result
    stays within the input's value range, and the map is linear in pixel
    values.
    """
    if width < 1 or height < 1:
        raise ValueError("target size must be >= 1")
    if width == img.width and height == img.height:
        return img
    x_lo, x_hi, wx = _resize_axis_coords(img.width, width)
    y_lo, y_hi, wy = _resize_axis_coords(img.height, height)
    s = img.samples
    rows_lo = s[:, y_lo, :]
    rows_hi = s[:, y_hi, :]
    rows = rows_lo + wy[None, :, None] * (rows_hi - rows_lo)
    cols_lo = rows[:, :, x_lo]
    cols_hi = rows[:, :, x_hi]
    out = cols_lo + wx[None, None, :] * (cols_hi - cols_lo)
    return RgbImage(out)


def resize_shorter_side(img: RgbImage, target: int) -> RgbImage:
    """Resize so the shorter side equals `target`, preserving aspect ratio.

    The longer side is rounded to the nearest integer.
    """
    if target < 1:
        raise ValueError("target must be >= 1")
    w, h = img.width, img.height
    if w <= h:
        new_w = target
        new_h = max(1, int(round(h * target / w)))
    else:
        new_h = target
        new_w = max(1, int(round(w * target / h)))
    return resize_bilinear(img, new_w, new_h)


def center_crop(img: RgbImage, size: int) -> RgbImage:
    """Crop a size x size window from the center; origin floors odd remainders."""
    if img.width < size or img.height < size:
        raise CropError(
            f"image {img.width}x{img.height} smaller than crop size {size}")
    x0 = (img.width - size) // 2
    y0 = (img.height - size) // 2
    return RgbImage(img.samples[:, y0:y0 + size, x0:x0 + size].copy())


def preprocess_geometry(img: RgbImage, spec: PreprocessSpec) -> RgbImage:
    """Resize shorter side to spec.target_size, then center crop to square.

    Photometric normalization is NOT applied here; it lives inside each
    embedding backend.
    """
    resized = resize_shorter_side(img, spec.target_size)
    return center_crop(resized, spec.target_size)


def display_sized(img: RgbImage, max_side: int = 768) -> RgbImage:
    """Shrink so the longest side is <= max_side; identity if already within."""
    longest = max(img.width, img.height)
    if longest <= max_side:
        return img
    if img.width >= img.height:
        new_w = max_side
        new_h = max(1, int(round(img.height * max_side / img.width)))
    else:
        new_h = max_side
        new_w = max(1, int(round(img.width * max_side / img.height)))
    return resize_bilinear(img, new_w, new_h)
