"""Extended Local Gradient Hexa Pattern descriptor.

For every pixel P and radius d, four first-order derivatives are taken at the
angles ``delta * (0, 45, 90, 135)`` degrees on P and on its eight square-ring
neighbours at distance d. Each of the six angle pairs compares its two
derivatives at those nine operands, giving a 9-bit code (reference pixel is
the most significant bit, then the ring clockwise from the top-left corner).
The feature vector concatenates one 512-bin code histogram per (radius, pair),
radius-major.

``delta=1`` gives the base LGHP angles, ``delta=2`` the extended ones
(0, 90, 180, 270 degrees).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend, _fallback
from .imageio import GrayImage

BINS = 512
PAIRS = _fallback.PAIRS
RING = _fallback.RING

# unit offsets on the square grid, x rightward, y downward
_DIRECTIONS = {
    0: (1, 0),
    45: (1, -1),
    90: (0, -1),
    135: (-1, -1),
    180: (-1, 0),
    270: (0, 1),
}


class DescriptorError(ValueError):
    pass


@dataclass(frozen=True)
class DescriptorConfig:
    delta: int = 2
    radii: tuple[int, ...] = (1, 2, 3)
    bins: int = BINS

    def __post_init__(self):
        object.__setattr__(self, "radii", tuple(int(r) for r in self.radii))
        if self.delta not in (1, 2):
            raise DescriptorError(f"delta must be 1 or 2, got {self.delta}")
        if not self.radii:
            raise DescriptorError("radii must be nonempty")
        if any(r < 1 for r in self.radii):
            raise DescriptorError(f"radii must be >= 1, got {list(self.radii)}")
        if any(b <= a for a, b in zip(self.radii, self.radii[1:])):
            raise DescriptorError(f"radii must be strictly increasing, got {list(self.radii)}")
        if self.bins != BINS:
            raise DescriptorError(f"bins is fixed at {BINS}")

    @property
    def length(self) -> int:
        return BINS * len(PAIRS) * len(self.radii)


@dataclass(frozen=True)
class AngleSet:
    degrees: tuple[int, int, int, int]
    offsets: tuple[tuple[int, int], ...]


@dataclass(frozen=True, eq=False)
class DerivativeField:
    """G(Z) = I(Z) - I(Z + d * offset) on the region where the target exists.

    ``values`` has the image's shape; entries outside ``defined`` are zero
    and carry no meaning.
    """

    angle: int
    radius: int
    width: int
    height: int
    values: np.ndarray
    defined: np.ndarray

    def at(self, x: int, y: int) -> int:
        if not self.defined[y, x]:
            raise IndexError(f"derivative undefined at ({x}, {y})")
        return int(self.values[y, x])


@dataclass(frozen=True, eq=False)
class CodeMap:
    """Codes of one angle pair at one radius over the valid region.

    ``codes[j, i]`` belongs to pixel ``(x, y) = (margin + i, margin + j)``.
    """

    pair: int
    radius: int
    margin: int
    codes: np.ndarray


def angle_offsets(delta: int) -> AngleSet:
    if delta not in (1, 2):
        raise DescriptorError(f"delta must be 1 or 2, got {delta}")
    degrees = tuple(delta * a for a in (0, 45, 90, 135))
    return AngleSet(degrees, tuple(_DIRECTIONS[a] for a in degrees))


def _offsets_array(delta: int) -> np.ndarray:
    return np.array(angle_offsets(delta).offsets, dtype=np.int32)


def derivative_field(img: GrayImage, angle: int, d: int, delta: int = 2) -> DerivativeField:
    dx, dy = angle_offsets(delta).offsets[angle]
    h, w = img.shape
    src = img.pixels.astype(np.int16)
    values = np.zeros((h, w), dtype=np.int16)
    defined = np.zeros((h, w), dtype=bool)
    # Z ranges over pixels whose target Z + d*(dx, dy) stays inside the image
    ys = slice(max(0, -dy * d), min(h, h - dy * d))
    xs = slice(max(0, -dx * d), min(w, w - dx * d))
    ts = slice(ys.start + dy * d, ys.stop + dy * d)
    tx = slice(xs.start + dx * d, xs.stop + dx * d)
    if ys.start < ys.stop and xs.start < xs.stop:
        values[ys, xs] = src[ys, xs] - src[ts, tx]
        defined[ys, xs] = True
    values.setflags(write=False)
    defined.setflags(write=False)
    return DerivativeField(angle, d, w, h, values, defined)


def encode(ga: int, gb: int) -> int:
    return 1 if ga > gb else 0


def code_at(img: GrayImage, p: tuple[int, int], pair: int, d: int, delta: int = 2) -> int:
    """Code of pixel ``p = (x, y)`` for angle pair ``pair`` at radius ``d``."""
    x, y = p
    h, w = img.shape
    m = 2 * d
    if not (m <= x < w - m and m <= y < h - m):
        raise DescriptorError(f"pixel {p} lies outside the valid region (margin {m})")
    offsets = angle_offsets(delta).offsets
    a, b = PAIRS[pair]
    pix = img.pixels

    def deriv(zx, zy, k):
        dx, dy = offsets[k]
        return int(pix[zy, zx]) - int(pix[zy + dy * d, zx + dx * d])

    code = 0
    for rdx, rdy in RING:
        zx, zy = x + rdx * d, y + rdy * d
        code = (code << 1) | encode(deriv(zx, zy, a), deriv(zx, zy, b))
    return code


def _check_support(img: GrayImage, d: int) -> None:
    side = 4 * d + 1
    if img.width < side or img.height < side:
        raise DescriptorError(
            f"no valid region: {img.width}x{img.height} image needs at least {side}x{side} for d={d}"
        )


def code_map(img: GrayImage, pair: int, d: int, delta: int = 2) -> CodeMap:
    _check_support(img, d)
    maps = _fallback.code_maps(img.pixels, angle_offsets(delta).offsets, d)
    codes = maps[pair]
    codes.setflags(write=False)
    return CodeMap(pair, d, 2 * d, codes)


def histogram(cmap: CodeMap) -> np.ndarray:
    return np.bincount(cmap.codes.ravel(), minlength=BINS).astype(np.uint32)


def valid_region_size(width: int, height: int, d: int) -> int:
    return max(0, width - 4 * d) * max(0, height - 4 * d)


def extract_features(img: GrayImage, cfg: DescriptorConfig = DescriptorConfig()) -> np.ndarray:
    """Feature vector of ``img``: uint32 counts of length ``cfg.length``."""
    for d in cfg.radii:
        _check_support(img, d)
    hist = _backend.code_histograms(
        img.pixels, _offsets_array(cfg.delta), np.asarray(cfg.radii, dtype=np.int32)
    )
    return np.asarray(hist).reshape(-1)
