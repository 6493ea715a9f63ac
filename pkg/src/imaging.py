#!/usr/bin/env python3
"""
Grayscale image value type, binary PGM (P5) I/O, nearest-neighbor resizing
and gray-level quantization - the pre-processing stage in front of GLCM
extraction.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from errors import (
    DimensionError,
    LevelRangeError,
    PgmLengthError,
    PgmParseError,
    UnsupportedFormatError,
)

log = logging.getLogger("IMAGING")

MAX_LEVELS = 65536
PGM_MAX_LEVELS = 256
_WHITESPACE = b" \t\n\r\v\f"


@dataclass(frozen=True, eq=False)
class GrayImage:
    """
    Immutable 2-D grid of quantized gray levels.

    pixels is stored row-major as a read-only uint16 array of shape
    (height, width); every value lies in [0, levels - 1].
    """

    pixels: np.ndarray
    levels: int

    def __post_init__(self):
        levels = int(self.levels)
        if not 2 <= levels <= MAX_LEVELS:
            raise LevelRangeError(f"levels must be in [2, {MAX_LEVELS}], got {levels}")

        raw = np.asarray(self.pixels)
        if raw.ndim != 2:
            raise DimensionError(f"pixels must be a 2-D grid, got shape {raw.shape}")
        height, width = raw.shape
        if width < 2 or height < 2:
            raise DimensionError(f"image must be at least 2x2, got {width}x{height}")
        if raw.dtype.kind not in "iub":
            raise LevelRangeError(f"pixels must be integers, got dtype {raw.dtype}")
        if raw.min() < 0 or raw.max() >= levels:
            raise LevelRangeError(
                f"pixel values must lie in [0, {levels - 1}], "
                f"got [{int(raw.min())}, {int(raw.max())}]"
            )

        pixels = raw.astype(np.uint16, copy=True)
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)
        object.__setattr__(self, "levels", levels)

    @classmethod
    def from_rows(cls, rows, levels):
        return cls(np.array(rows, dtype=np.int64), levels)

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.levels == other.levels and np.array_equal(self.pixels, other.pixels)

    def __repr__(self):
        return f"GrayImage({self.width}x{self.height}, levels={self.levels})"


def _header_tokens(data: bytes):
    """Return the four P5 header tokens and the offset of the first raster byte"""
    tokens = []
    pos = 0
    end = len(data)

    while len(tokens) < 4:
        while pos < end and data[pos] in _WHITESPACE:
            pos += 1
        if pos < end and data[pos] == ord("#"):
            while pos < end and data[pos] not in b"\r\n":
                pos += 1
            continue
        start = pos
        while pos < end and data[pos] not in _WHITESPACE and data[pos] != ord("#"):
            pos += 1
        if start == pos:
            raise PgmParseError("<eof>", f"header ended after {len(tokens)} of 4 tokens")
        tokens.append(data[start:pos].decode("ascii", errors="replace"))

    # Exactly one whitespace byte separates maxval from the raster
    if pos < end and data[pos] not in _WHITESPACE:
        raise PgmParseError(tokens[-1], "maxval must be followed by whitespace")
    return tokens, pos + 1


def _positive_int(token, what):
    try:
        value = int(token)
    except ValueError:
        raise PgmParseError(token, f"{what} is not an integer") from None
    if value <= 0:
        raise PgmParseError(token, f"{what} must be positive")
    return value


def read_pgm(data: bytes) -> GrayImage:
    """
    Parse a binary P5 graymap with maxval <= 255. The result always has 256
    levels; maxval only bounds the pixel values.
    """
    tokens, offset = _header_tokens(bytes(data))
    magic, width_token, height_token, maxval_token = tokens

    if magic != "P5":
        raise PgmParseError(magic, "expected magic number P5")
    width = _positive_int(width_token, "width")
    height = _positive_int(height_token, "height")
    maxval = _positive_int(maxval_token, "maxval")
    if maxval >= PGM_MAX_LEVELS:
        raise UnsupportedFormatError(f"unsupported maxval {maxval} (only 8-bit graymaps are read)")

    expected = width * height
    available = max(0, len(data) - offset)
    if available < expected:
        raise PgmLengthError(
            f"raster truncated: header declares {width}x{height} = {expected} pixels, "
            f"found {available} bytes"
        )

    pixels = np.frombuffer(data, dtype=np.uint8, count=expected, offset=offset)
    pixels = pixels.reshape(height, width)
    if int(pixels.max()) > maxval:
        raise PgmParseError(str(int(pixels.max())), f"pixel value exceeds maxval {maxval}")

    return GrayImage(pixels, PGM_MAX_LEVELS)


def write_pgm(image: GrayImage) -> bytes:
    """Serialize to P5 with maxval = levels - 1"""
    if image.levels > PGM_MAX_LEVELS:
        raise UnsupportedFormatError(
            f"cannot write {image.levels} gray levels to an 8-bit graymap (max {PGM_MAX_LEVELS})"
        )
    header = f"P5\n{image.width} {image.height}\n{image.levels - 1}\n".encode("ascii")
    return header + image.pixels.astype(np.uint8).tobytes()


def read_pgm_file(path: Union[str, Path]) -> GrayImage:
    path = Path(path)
    image = read_pgm(path.read_bytes())
    log.debug(f"Read {path.name}: {image!r}")
    return image


def write_pgm_file(path: Union[str, Path], image: GrayImage) -> Path:
    path = Path(path)
    path.write_bytes(write_pgm(image))
    return path


def resize_nearest(image: GrayImage, new_width: int, new_height: int) -> GrayImage:
    """Nearest-neighbor resampling: source index = floor(target * source_dim / target_dim)"""
    if new_width < 2 or new_height < 2:
        raise DimensionError(f"target size must be at least 2x2, got {new_width}x{new_height}")
    if new_width == image.width and new_height == image.height:
        return image

    rows = (np.arange(new_height) * image.height) // new_height
    cols = (np.arange(new_width) * image.width) // new_width
    return GrayImage(image.pixels[np.ix_(rows, cols)], image.levels)


def quantize(image: GrayImage, target_levels: int) -> GrayImage:
    """Map each pixel to floor(pixel * target_levels / levels)"""
    if not 2 <= target_levels <= image.levels:
        raise LevelRangeError(
            f"target levels must be in [2, {image.levels}], got {target_levels}"
        )
    if target_levels == image.levels:
        return image

    pixels = (image.pixels.astype(np.int64) * target_levels) // image.levels
    return GrayImage(pixels, target_levels)
