"""Grayscale images: binary PGM I/O and bilinear resize to the canonical 64x64."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

CANONICAL_SIZE = 64

_WHITESPACE = b" \t\n\r\v\f"


class PGMError(ValueError):
    """Raised when a byte string is not a supported binary PGM."""


@dataclass(frozen=True, eq=False)
class GrayImage:
    """An 8-bit grayscale raster.

    ``pixels`` is a read-only ``(height, width)`` uint8 array, row-major.
    """

    width: int
    height: int
    pixels: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image dimensions must be >= 1, got {self.width}x{self.height}")
        pixels = np.asarray(self.pixels)
        if pixels.size != self.width * self.height:
            raise ValueError(
                f"pixel count {pixels.size} does not match {self.width}x{self.height}"
            )
        if pixels.dtype != np.uint8:
            if pixels.size and (pixels.min() < 0 or pixels.max() > 255):
                raise ValueError("intensities must lie in [0, 255]")
            pixels = pixels.astype(np.uint8)
        pixels = np.ascontiguousarray(pixels.reshape(self.height, self.width))
        if pixels.flags.writeable:
            pixels = pixels.copy()
            pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)

    @classmethod
    def from_array(cls, array) -> GrayImage:
        array = np.asarray(array)
        if array.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {array.shape}")
        return cls(width=array.shape[1], height=array.shape[0], pixels=array)

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    def __eq__(self, other):
        if not isinstance(other, GrayImage):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.pixels, other.pixels)

    def __hash__(self):
        return hash((self.width, self.height, self.pixels.tobytes()))

    def __repr__(self):
        return f"GrayImage({self.width}x{self.height})"


def _next_token(data: bytes, pos: int, field: str) -> tuple[bytes, int]:
    """Return the next whitespace-delimited header token, skipping comments."""
    n = len(data)
    while pos < n:
        c = data[pos : pos + 1]
        if c == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif c in _WHITESPACE:
            pos += 1
        else:
            break
    start = pos
    while pos < n and data[pos : pos + 1] not in _WHITESPACE and data[pos : pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise PGMError(f"malformed header: missing {field}")
    return data[start:pos], pos


def _header_int(data: bytes, pos: int, field: str) -> tuple[int, int]:
    token, pos = _next_token(data, pos, field)
    if not token.isdigit():
        raise PGMError(f"malformed header: bad {field} {token!r}")
    return int(token), pos


def load_pgm(data: bytes) -> GrayImage:
    """Parse a binary (P5) PGM with maxval <= 255."""
    if data[:2] != b"P5":
        raise PGMError(f"unsupported magic {data[:2]!r}")
    pos = 2
    width, pos = _header_int(data, pos, "width")
    height, pos = _header_int(data, pos, "height")
    maxval, pos = _header_int(data, pos, "maxval")
    if width < 1 or height < 1:
        raise PGMError(f"malformed header: bad dimensions {width}x{height}")
    if maxval < 1 or maxval > 255:
        raise PGMError(f"unsupported maxval {maxval}")
    if pos >= len(data) or data[pos : pos + 1] not in _WHITESPACE:
        raise PGMError("truncated pixel data")
    pos += 1  # exactly one whitespace byte before the raster
    need = width * height
    raster = data[pos : pos + need]
    if len(raster) < need:
        raise PGMError(f"truncated pixel data: expected {need} bytes, got {len(raster)}")
    pixels = np.frombuffer(raster, dtype=np.uint8).reshape(height, width)
    if pixels.max(initial=0) > maxval:
        raise PGMError(f"pixel value exceeds maxval {maxval}")
    return GrayImage(width, height, pixels)


def dump_pgm(img: GrayImage) -> bytes:
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    return header + img.pixels.tobytes()


def read_pgm(path: str | os.PathLike) -> GrayImage:
    with open(path, "rb") as fh:
        return load_pgm(fh.read())


def write_pgm(path: str | os.PathLike, img: GrayImage) -> None:
    with open(path, "wb") as fh:
        fh.write(dump_pgm(img))


def _sample_grid(n_out: int, n_in: int):
    # Half-pixel centres: output pixel i samples input coordinate (i + 0.5) * n_in / n_out - 0.5.
    # Kept exact as a fraction over 2 * n_out, so exact halves round the same everywhere.
    denom = 2 * n_out
    num = (2 * np.arange(n_out, dtype=np.int64) + 1) * n_in - n_out
    num = np.clip(num, 0, (n_in - 1) * denom)
    lo = num // denom
    hi = np.minimum(lo + 1, n_in - 1)
    return lo, hi, num - lo * denom, denom


def resize(img: GrayImage, width: int, height: int) -> GrayImage:
    """Bilinear resize with half-pixel-centre sampling, rounding half up.

    Integer arithmetic throughout; the result is the exactly rounded value.
    """
    if (img.width, img.height) == (width, height):
        return img
    x0, x1, fx, dx = _sample_grid(width, img.width)
    y0, y1, fy, dy = _sample_grid(height, img.height)
    p = img.pixels.astype(np.int64)
    top = p[y0][:, x0] * (dx - fx) + p[y0][:, x1] * fx
    bottom = p[y1][:, x0] * (dx - fx) + p[y1][:, x1] * fx
    total = top * (dy - fy)[:, None] + bottom * fy[:, None]
    scale = dx * dy
    out = (total + scale // 2) // scale
    return GrayImage(width, height, np.clip(out, 0, 255).astype(np.uint8))


def resize_to_canonical(img: GrayImage) -> GrayImage:
    return resize(img, CANONICAL_SIZE, CANONICAL_SIZE)


def load_canonical(path: str | os.PathLike) -> GrayImage:
    """Read a PGM file and bring it to the canonical 64x64 form."""
    return resize_to_canonical(read_pgm(path))
