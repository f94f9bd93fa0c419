"""Image container and 8-bit codec helpers.

Pixels are kept as float64 arrays of shape (height, width, channels) on a
[0, 255] scale. Grayscale and RGB are the only supported layouts.
Perturbed outputs are always written as PNG; JPEG is accepted read-only so
existing corpora can be imported without transcoding them first.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import InvalidImageError

MIN_SIDE = 8  # smallest grid the band geometry is meaningful on
_VALID_CHANNELS = (1, 3)


@dataclass
class Image:
    """An 8-bit-scale raster held in float64.

    Attributes:
        pixels: Array of shape (H, W, C) with values in [0, 255].
            C is 1 (grayscale) or 3 (RGB).
    """

    pixels: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        arr = np.asarray(self.pixels, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[:, :, np.newaxis]
        if arr.ndim != 3:
            raise InvalidImageError(
                f"expected 2- or 3-dimensional pixel array, got ndim={arr.ndim}"
            )
        h, w, c = arr.shape
        if c not in _VALID_CHANNELS:
            raise InvalidImageError(f"channel count must be 1 or 3, got {c}")
        if h < MIN_SIDE or w < MIN_SIDE:
            raise InvalidImageError(
                f"image must be at least {MIN_SIDE}x{MIN_SIDE}, got {h}x{w}"
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidImageError("pixel values must be finite")
        if arr.min() < 0.0 or arr.max() > 255.0:
            raise InvalidImageError(
                f"pixel values must lie in [0, 255], got range "
                f"[{arr.min():.4g}, {arr.max():.4g}]"
            )
        self.pixels = arr

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @classmethod
    def from_array(cls, arr: np.ndarray, *, clamp: bool = False) -> "Image":
        """Build an Image from an array, optionally clamping into range.

        Args:
            arr: (H, W) or (H, W, C) array on a [0, 255] scale.
            clamp: When True, values are clipped into [0, 255] instead of
                rejected.

        Raises:
            InvalidImageError: On bad shape, non-finite values, or (without
                clamp) out-of-range values.
        """
        arr = np.array(arr, dtype=np.float64, copy=True)
        if clamp and arr.size and np.all(np.isfinite(arr)):
            arr = np.clip(arr, 0.0, 255.0)
        return cls(pixels=arr)

    @classmethod
    def load(cls, path: str | Path) -> "Image":
        """Read a PNG or JPEG file.

        Palette, alpha, and high-bit-depth inputs are converted to 8-bit
        RGB; single-channel inputs stay grayscale.
        """
        try:
            with PILImage.open(path) as im:
                converted = _normalize_mode(im)
        except (OSError, ValueError) as exc:
            raise InvalidImageError(f"cannot decode image at {path}: {exc}") from exc
        arr = np.asarray(converted, dtype=np.float64)
        return cls.from_array(arr)

    @classmethod
    def from_bytes(cls, data: bytes) -> "Image":
        """Decode an in-memory PNG or JPEG payload."""
        try:
            with PILImage.open(io.BytesIO(data)) as im:
                converted = _normalize_mode(im)
        except (OSError, ValueError) as exc:
            raise InvalidImageError(f"cannot decode image payload: {exc}") from exc
        arr = np.asarray(converted, dtype=np.float64)
        return cls.from_array(arr)

    def quantized(self) -> np.ndarray:
        """Pixels rounded to nearest integer and clipped, as uint8."""
        return np.clip(np.rint(self.pixels), 0, 255).astype(np.uint8)

    def _to_pil(self) -> PILImage.Image:
        q = self.quantized()
        if self.channels == 1:
            return PILImage.fromarray(q[:, :, 0], mode="L")
        return PILImage.fromarray(q, mode="RGB")

    def to_png_bytes(self) -> bytes:
        """Encode as PNG. The encoding is deterministic for fixed pixels."""
        buf = io.BytesIO()
        self._to_pil().save(buf, format="PNG")
        return buf.getvalue()

    def save_png(self, path: str | Path) -> None:
        """Write the image to disk as PNG (the only supported output codec)."""
        Path(path).write_bytes(self.to_png_bytes())


def _normalize_mode(im: PILImage.Image) -> PILImage.Image:
    if im.mode == "L":
        return im.copy()
    if im.mode in ("I", "I;16", "LA"):
        return im.convert("L")
    return im.convert("RGB")


def images_equal(a: Image, b: Image) -> bool:
    """True when both images have identical shape and pixel values."""
    return a.pixels.shape == b.pixels.shape and bool(np.array_equal(a.pixels, b.pixels))
